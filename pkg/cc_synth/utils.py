import os
import time
import datetime
import numpy as np


def get_time():
    """
    Returns the current time in seconds

    Returns:
        Float representing the current time in seconds, rounded to
        milliseconds.
    """
    return int(round(time.time() * 1000.0)) / 1000.0


def get_datetime():
    """
    Returns a string containing the current date and time

    Returns:
        String containing the current date and time
    """
    return str(datetime.datetime.now())


def create_unique_folder(path, prefered):
    """
    Creates a folder with a unique name at the specified path.

    Creates a folder with a name specified by the user at the specified path.
    If this folder already exists, the name of the folder is appended by
    an underscore and the lowest >0 integer number that fixes the naming
    conflict.

    Args:
        path: Path at which the folder should be created
        prefered: Name of the folder that should be created

    Returns:
        Path of the created folder.
    """
    path = str(path)
    # Strip folder separator from path if it ends with one
    if path[-1] == os.sep:
        path = path[:-1]
    folder_path = path + os.sep + prefered
    i = 0
    while os.path.exists(folder_path):
        # Folder already exists, append _# to the name and try again
        i += 1
        folder_path = path + os.sep + prefered + '_' + str(i)
    os.makedirs(folder_path)
    return folder_path


def benchmark_matrix_inverse(size=1000, seed=0):
    """
    Benchmark the user's setup by measuring the time taken by matrix inversion

    Wall-clock timings of the synthesis pipeline are hardware specific. This
    reference number is stored next to every run so that timings of different
    machines can be compared qualitatively.

    Args:
        size: Dimension of the random square matrix to invert. Default is
            1000.
        seed: Seed of the random matrix.

    Returns:
        Time in seconds taken by the matrix creation and inversion.
    """
    t_start = time.perf_counter()
    x = np.random.default_rng(seed).random((size, size))
    x = np.linalg.inv(x)
    del x
    return time.perf_counter() - t_start


def require_extension(path, allowed_extensions):
    """
    Checks if the extension for a provided path is in a set of predefined
    extensions.

    If the extension matches one of the predefined ones, the found extension
    is returned (in lowercase). If it does not, a ValueError is raised.

    Args:
        path: Path of which the extension should be checked
        allowed_extensions: List of allowed extensions, without preceding '.'

    Returns:
        The found extension in all lowercase

    Raises:
        ValueError: Extension '?' not supported
    """
    provided = str(path).split('.')[-1]
    for ext in allowed_extensions:
        if ext.lower() == provided.lower():
            return ext.lower()
    raise ValueError("Extension '{}' not supported.".format(provided))


def worker_count(default=None):
    """
    Number of workers for thread pools.

    The environment variable CC_SYNTH_THREADS caps the count. Without it the
    number of available CPUs is used.

    Args:
        default: Count to use when the environment variable is not set. If
            None (default), `os.cpu_count()` is used.

    Returns:
        Positive integer.

    Raises:
        ValueError: CC_SYNTH_THREADS is not a positive integer.
    """
    if default is None:
        default = os.cpu_count() or 1
    value = os.environ.get('CC_SYNTH_THREADS')
    if value is None or value.strip() == '':
        return max(1, int(default))
    try:
        count = int(value)
    except ValueError:
        raise ValueError(
            "CC_SYNTH_THREADS should be a positive integer, got '{}'.".format(
                value))
    if count < 1:
        raise ValueError(
            "CC_SYNTH_THREADS should be a positive integer, got '{}'.".format(
                value))
    return count


def to_jsonable(value):
    """
    Convert numpy containers and scalars into plain Python objects so they
    can be written with json or yaml.
    """
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.bool_):
        return bool(value)
    return value
