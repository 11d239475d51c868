import numpy as np
import pytest
from numpy.testing import assert_array_equal

from plirls.exceptions import InstanceError
from plirls.generate import generate_instance, make_instance
from plirls.schemas import Dims, GenerateSource


def _vector_source(seed=7, sparsity=0.2, noise=1.0):
    return GenerateSource(seed=seed, dims=Dims(m=20, n=10, k=3), sparsity=sparsity, noise=noise)


def test_same_seed_gives_same_arrays():
    first = make_instance("sparse-lsq", 7, _vector_source())
    second = make_instance("sparse-lsq", 7, _vector_source())
    for name in ("A", "b", "x_true"):
        assert_array_equal(first[name], second[name])
    other = make_instance("sparse-lsq", 8, _vector_source(seed=8))
    assert not np.array_equal(first["A"], other["A"])


def test_vector_instance_structure():
    arrays = make_instance("l0-regression", 3, _vector_source(sparsity=0.25, noise=2.0))
    A, b, x_true = arrays["A"], arrays["b"], arrays["x_true"]
    assert A.shape == (20, 10)
    assert np.count_nonzero(x_true) == 3
    corruption = b - A @ x_true
    corrupted = np.abs(corruption) > 1e-12
    assert np.count_nonzero(corrupted) == 5
    assert np.all((np.abs(corruption[corrupted]) >= 2.0) & (np.abs(corruption[corrupted]) <= 4.0))


def test_clean_vector_instance():
    arrays = make_instance("sparse-lsq", 1, _vector_source(sparsity=0.0))
    assert np.allclose(arrays["b"], arrays["A"] @ arrays["x_true"])


@pytest.mark.parametrize("kind, shape", [("lowrank", (6, 8)), ("multiblock", (8, 8))])
def test_matrix_instance_structure(kind, shape):
    source = GenerateSource(seed=2, dims=Dims(m=6, n=8, rank=2), sparsity=0.1, noise=1.0)
    arrays = make_instance(kind, 2, source)
    assert arrays["D"].shape == shape
    assert np.linalg.matrix_rank(arrays["X_true"]) == 2
    assert np.allclose(arrays["D"], arrays["X_true"] + arrays["S_true"])
    assert np.count_nonzero(arrays["S_true"]) == round(0.1 * shape[0] * shape[1])


@pytest.mark.parametrize("kind, dims", [("sparse-lsq", Dims(m=5, n=3, k=4)), ("lowrank", Dims(n=3, rank=4)),
                                        ("sparse-lsq", Dims(n=3))])
def test_invalid_dimensions(kind, dims):
    with pytest.raises(InstanceError):
        make_instance(kind, 0, GenerateSource(seed=0, dims=dims))


def test_generated_files_are_byte_identical(tmp_path):
    first = generate_instance("sparse-lsq", 11, _vector_source(seed=11), tmp_path / "a")
    second = generate_instance("sparse-lsq", 11, _vector_source(seed=11), tmp_path / "b")
    assert set(first) == {"A", "b", "x_true"}
    for name, path in first.items():
        assert path.read_bytes() == second[name].read_bytes()
