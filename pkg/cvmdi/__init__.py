import os

__version__ = "0.1.0"

if os.name != 'nt':
    import multiprocessing

    # The worker pool relies on forked children inheriting the parameter set
    if multiprocessing.get_start_method(allow_none=True) is None:
        multiprocessing.set_start_method('fork')
