# Define custom themes for the rich console here
from rich.theme import Theme

ct = Theme(
    {
        'default': 'bright_white',
        'info': 'bright_white',
        'error': 'bold italic red',
        'debug': 'orange1',
        'warning': 'dark_orange',
        'env': 'aquamarine1',
        'success': 'bright_green',
        'solver': 'blue',
        'converged': 'bright_green',
        'maxiters': 'dark_orange',
        'diverged': 'bold red',
        'check': 'aquamarine1',
        'violation': 'bold italic red',
    }
)
