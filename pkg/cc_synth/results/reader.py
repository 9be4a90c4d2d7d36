import os

import pandas as pd
import yaml

__all__ = ['make_dataframe', 'Result']


def make_dataframe(result_paths):
    """
    Reads the results of all provided output folders and stores them in a
    pandas DataFrame.

    Every run folder (a subfolder with an experiment.yaml file) gives one row
    holding the problem summary, the method and the result metrics.

    Args:
        result_paths: Dictionary. Keys indicate the name for the experiment,
            the values indicate the output folder of said experiment (the
            `--out` directory of the command line interface).

    Returns:
        pandas.DataFrame with one row per run and an 'experiment' column.
    """
    frames = []
    for name, path in result_paths.items():
        frame = Result(path).get_results()
        frame['experiment'] = name
        frames.append(frame)
    if not frames:
        return pd.DataFrame()
    return pd.concat(frames, ignore_index=True)


class Result:
    """
    Reads the run folders below one output folder.

    Under normal circumstances the user should not have to deal with this
    class directly. Instead, the `make_dataframe` function should be used.

    Args:
        path: Path to the output folder.
    """

    def __init__(self, path):
        self.path = None
        self.connect(path)

    def connect(self, path):
        """
        Connect the Result object to a specific folder.

        Raises:
            FileNotFoundError: The path does not exist or is not an output
                folder (benchmarks.yaml is missing).
        """
        path = str(path)
        if not os.path.isdir(path):
            raise FileNotFoundError("Path '{}' not found.".format(path))
        if not os.path.exists(os.path.join(path, 'benchmarks.yaml')):
            raise FileNotFoundError(
                "Path '{}' does not seem to be an output folder "
                "(benchmarks.yaml is missing).".format(path))
        self.path = path

    def run_folders(self):
        return sorted(
            d for d in os.listdir(self.path)
            if os.path.isfile(os.path.join(self.path, d, 'experiment.yaml')))

    def read_experiment_yaml(self, folder_name):
        with open(os.path.join(self.path, folder_name,
                               'experiment.yaml'), 'r') as stream:
            return yaml.safe_load(stream)

    def extract_result_information(self, yaml_contents):
        """
        Flatten an experiment.yaml dictionary into a single row.

        The problem summary keys are kept as they are, results are prefixed
        by nothing and the method and backend get their own columns. Runs
        that crashed before logging results give no result columns.
        """
        row = dict(yaml_contents.get('problem', {}))
        row['method'] = yaml_contents.get('experiment', {}).get('method')
        row['backend'] = yaml_contents.get('backend', {}).get('name')
        row.update(yaml_contents.get('results') or {})
        return row

    def get_results(self):
        """
        Read the results of every run folder.

        Returns:
            pandas.DataFrame ordered by problem name and horizon.
        """
        rows = []
        for folder in self.run_folders():
            row = self.extract_result_information(
                self.read_experiment_yaml(folder))
            row['run'] = folder
            rows.append(row)
        frame = pd.DataFrame(rows)
        if frame.empty:
            return frame
        keys = [k for k in ('name', 'horizon', 'run') if k in frame]
        return frame.sort_values(keys).reset_index(drop=True)
