"""
Output module saves results: every table goes to a CSV file
next to a JSON sidecar that carries the schema tag, the
subcommand, the fully resolved configuration, the seed and
any run diagnostics.
"""

from dataclasses import asdict, is_dataclass
import json
import logging
from os.path import isdir, join, splitext
import numpy as np
from pandas import DataFrame, read_csv
from lrdensity.errors import ValidationError

SCHEMA = "lrd-output-v1"


def _plain(value):
    if is_dataclass(value) and not isinstance(value, type):
        return _plain(asdict(value))
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(i) for i in value]
    if isinstance(value, np.ndarray):
        return _plain(value.tolist())
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, float) and not np.isfinite(value):
        return None
    return value


def sidecar_path(csv_path: str) -> str:
    """
    JSON sidecar of a CSV file
    """
    return splitext(csv_path)[0] + ".json"


def save_table(table: DataFrame, store_path: str, name: str, command: str,
               config: dict, seed: int | None, diagnostics: dict | None = None) -> str:
    """
    Takes a result table and writes NAME.csv with NAME.json into
    the store directory

    Parameters:
        table(DataFrame): result table
        store_path(str): existing directory
        name(str): file stem
        command(str): subcommand that produced the table
        config(dict): resolved configuration
        seed(int|None): seed of the run
        diagnostics(dict|None): extra run information
    Returns:
        csv_path(str): path of the CSV file
    """
    if not isdir(store_path):
        raise ValidationError(f"Path {store_path} does not exist")
    csv_path = join(store_path, name + ".csv")
    table.to_csv(csv_path, index=False)
    sidecar = {"schema": SCHEMA, "command": command, "columns": list(table.columns),
               "rows": int(len(table)), "seed": seed, "config": _plain(config),
               "diagnostics": _plain(diagnostics or {})}
    with open(sidecar_path(csv_path), "w", encoding="utf-8") as out:
        json.dump(sidecar, out, indent=2, allow_nan=False)
    logging.info("Results saved to %s", csv_path)
    return csv_path


def load_table(csv_path: str) -> tuple[DataFrame, dict]:
    """
    Reads a CSV result with its sidecar, checking the schema tag
    and the column list

    Parameters:
        csv_path(str): CSV file written by save_table
    Returns:
        table, sidecar(tuple[DataFrame, dict]): table and metadata
    """
    with open(sidecar_path(csv_path), "r", encoding="utf-8") as inp:
        sidecar = json.load(inp)
    if sidecar.get("schema") != SCHEMA:
        raise ValidationError(f"Unknown output schema {sidecar.get('schema')!r}")
    table = read_csv(csv_path)
    if list(table.columns) != sidecar["columns"]:
        raise ValidationError(f"Columns of {csv_path} differ from its sidecar")
    return table, sidecar
