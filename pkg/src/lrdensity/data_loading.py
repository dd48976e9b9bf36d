"""
Data loading module contains ingest_csv, which reads a CSV file
into a SortedSample (outcome with optional weights) or into
PanelData (outcome with group, instrument and covariate columns),
validating every cell on the way.
"""

from dataclasses import dataclass, field
import logging
from os.path import isfile
import numpy as np
from pandas import DataFrame, read_csv, to_numeric
from pandas.errors import EmptyDataError, ParserError
from lrdensity.errors import ValidationError
from lrdensity.estimation.edf import SortedSample, sort_sample
from lrdensity.program_eval.weighting import PanelData

ROLES = ("x", "weight", "t", "d")


@dataclass
class ColumnMap:
    """
    Which CSV column plays which role

    Parameters:
        x(str): outcome column
        weight(str|None): weight column
        t(str|None): binary group or treatment column
        d(str|None): binary instrument column
        z(list[str]): covariate columns
    """
    x: str = "x"
    weight: str | None = None
    t: str | None = None
    d: str | None = None
    z: list[str] = field(default_factory=list)

    @property
    def panel(self) -> bool:
        """
        Whether the map asks for panel data
        """
        return self.t is not None

    def required(self) -> list[str]:
        """
        Columns that must be present
        """
        names = [getattr(self, role) for role in ROLES if getattr(self, role) is not None]
        return names + list(self.z)


def _numeric_column(df: DataFrame, name: str, binary: bool = False) -> np.ndarray:
    values = to_numeric(df[name], errors="coerce")
    bad = values.isna() | ~np.isfinite(values.to_numpy(dtype=float, na_value=np.nan))
    if bad.any():
        row = int(np.flatnonzero(bad.to_numpy())[0])
        # data rows are counted from 1, the header is row 0
        raise ValidationError(
            f'Row {row + 1}, column "{name}": cannot parse {df[name].iloc[row]!r} as a finite number')
    array = values.to_numpy(dtype=float)
    if binary:
        wrong = ~np.isin(array, (0.0, 1.0))
        if wrong.any():
            row = int(np.flatnonzero(wrong)[0])
            raise ValidationError(f'Row {row + 1}, column "{name}": value {array[row]:g} is not 0 or 1')
    return array


def ingest_csv(path: str, column_map: ColumnMap) -> PanelData | SortedSample:
    """
    Takes a path to a CSV file with a header row and the column map,
    and returns the validated data

    Arguments:
        path(str): CSV file
        column_map(ColumnMap): column roles
    Returns:
        data(PanelData|SortedSample): PanelData when a group column is
        mapped, otherwise the sorted (weighted) outcome
    """
    if not isfile(path):
        raise ValidationError(f"Input file {path} does not exist")
    try:
        df = read_csv(path, dtype=str, skipinitialspace=True)
    except (EmptyDataError, ParserError, UnicodeDecodeError) as err:
        raise ValidationError(f"Cannot parse {path}: {err}") from err
    missing = [name for name in column_map.required() if name not in df.columns]
    if missing:
        raise ValidationError(f"Missing column(s) {', '.join(missing)} in {path}")
    if df.empty:
        raise ValidationError(f"{path} has no data rows")
    x = _numeric_column(df, column_map.x)
    weights = None if column_map.weight is None else _numeric_column(df, column_map.weight)
    logging.info("Read %s rows from %s", len(df), path)
    if not column_map.panel:
        if column_map.d is not None:
            raise ValidationError("Instrument column needs a treatment column")
        return sort_sample(x, weights)
    if weights is not None:
        raise ValidationError("Weights are estimated from the group columns, drop the weight column")
    t = _numeric_column(df, column_map.t, binary=True)
    d = None if column_map.d is None else _numeric_column(df, column_map.d, binary=True)
    covariates = [_numeric_column(df, name) for name in column_map.z]
    z = np.column_stack([np.ones(x.size), *covariates])
    return PanelData(x, t, d, z)
