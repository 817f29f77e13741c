"""Study-table parsing and result emission.

Input tables are CSV with a header naming either `z` or `effect,se`, plus an
optional `label` (or `study`) column. Output is CSV (RFC 4180, CRLF line ends)
or a single JSON object {"meta": ..., "data": ...}. Floats are written in
Python's shortest round-trip form.
"""
import csv
import io
import json
import logging
import sys
from pathlib import Path
from typing import IO, Any, Dict, List, Literal, Mapping, Optional, Sequence, Union

import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, FiniteFloat, ValidationError, field_validator

from failsafe_nr.config_setup import OutputFormat
from failsafe_nr.core.estimator import StudySet
from failsafe_nr.errors import FormatError, RowValidationError
from failsafe_nr.utils.iterables import flatten_dict

logger = logging.getLogger(__name__)

LABEL_COLUMNS = ("label", "study")

Record = Union[BaseModel, Mapping[str, Any]]


class ZRow(BaseModel):
    z: FiniteFloat


class EffectRow(BaseModel):
    effect: FiniteFloat
    se: FiniteFloat

    @field_validator("se")
    @classmethod
    def check_se(cls, v: float) -> float:
        if not v > 0:
            raise ValueError("standard error must be > 0")
        return v


class StudyRow(BaseModel):
    model_config = ConfigDict(frozen=True)

    row: int = Field(description="1-based data row in the source file.")
    z: float
    effect: Optional[float] = None
    se: Optional[float] = None
    label: Optional[str] = None


class StudyTable(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["z", "effect_se"]
    rows: List[StudyRow]

    @property
    def k(self) -> int:
        return len(self.rows)

    def to_study_set(self) -> StudySet:
        labels = [r.label for r in self.rows]
        labels = tuple(labels) if all(l is not None for l in labels) else None
        if self.kind == "effect_se":
            return StudySet.from_effects([r.effect for r in self.rows], [r.se for r in self.rows], labels=labels)
        return StudySet(z_scores=tuple(r.z for r in self.rows), labels=labels)


def _row_error(row: int, e: ValidationError, cells: Mapping[str, str]) -> RowValidationError:
    first = e.errors()[0]
    field = str(first["loc"][0]) if first["loc"] else "row"
    return RowValidationError(row, field, first["msg"], cells.get(field))


def _filled(cells: Mapping[str, str], names: Sequence[str]) -> bool:
    return any(cells.get(n, "").strip() != "" for n in names)


def parse_study_csv(stream: Union[IO[str], str, Path]) -> StudyTable:
    """Read and validate a study table. Row numbers in errors count data rows from 1."""
    try:
        frame = pd.read_csv(stream, dtype=str, keep_default_na=False, skipinitialspace=True)
    except pd.errors.EmptyDataError as e:
        raise FormatError("study table is empty: expected a header naming `z` or `effect,se`") from e
    except (pd.errors.ParserError, UnicodeDecodeError) as e:
        raise FormatError(f"could not read study table: {e}") from e

    frame.columns = [str(c).strip().lower() for c in frame.columns]
    columns = set(frame.columns)
    has_z = "z" in columns
    has_effect = {"effect", "se"} <= columns
    if not has_z and not has_effect:
        raise FormatError(f"header must name `z` or `effect,se`, got {list(frame.columns)}")
    if len(frame) == 0:
        raise FormatError("study table has a header but no rows")
    label_col = next((c for c in LABEL_COLUMNS if c in columns), None)

    kinds = set()
    rows = []
    for i, cells in enumerate(frame.to_dict(orient="records"), start=1):
        label = (cells[label_col].strip() or None) if label_col else None
        z_given = has_z and _filled(cells, ["z"])
        effect_given = has_effect and _filled(cells, ["effect", "se"])
        if z_given and effect_given:
            raise RowValidationError(i, "z", "row gives both `z` and `effect,se`")
        kind = "effect_se" if effect_given or not has_z else "z"
        kinds.add(kind)
        if len(kinds) > 1:
            raise FormatError(f"row {i} mixes `z` rows with `effect,se` rows; one file must use one kind")
        try:
            if kind == "z":
                parsed = ZRow(z=cells["z"].strip())
                rows.append(StudyRow(row=i, z=parsed.z, label=label))
            else:
                parsed = EffectRow(effect=cells["effect"].strip(), se=cells["se"].strip())
                rows.append(StudyRow(row=i, z=parsed.effect / parsed.se, effect=parsed.effect, se=parsed.se, label=label))
        except ValidationError as e:
            raise _row_error(i, e, cells) from e

    table = StudyTable(kind=kinds.pop(), rows=rows)
    logger.info("parsed %d studies (%s)", table.k, table.kind)
    return table


def _plain(record: Record) -> Dict[str, Any]:
    if isinstance(record, BaseModel):
        return record.model_dump(mode="json", by_alias=True)
    return {k: (v.value if hasattr(v, "value") and not isinstance(v, (int, float)) else v) for k, v in record.items()}


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if hasattr(value, "item"):
        return _cell(value.item())
    return str(value)


def _jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if hasattr(value, "item") and not isinstance(value, (str, bytes)):
        return value.item()
    return value


def write_csv_table(records: Sequence[Record], out: IO[str], columns: Optional[Sequence[str]] = None) -> None:
    """One table with a header row. An empty table still gets its header when `columns` is given."""
    rows = [flatten_dict(_plain(r), delimiter="_", flatten_lists=True) for r in records]
    if columns is None:
        columns = list(rows[0].keys()) if rows else []
    writer = csv.writer(out, quoting=csv.QUOTE_MINIMAL)
    if columns:
        writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(row.get(c)) for c in columns])


def _dump_json(obj: Any) -> str:
    return json.dumps(_jsonable(obj), indent=2, allow_nan=False)


def data_payload(tables: Mapping[str, Sequence[Record]]) -> Any:
    """A single table serialises as a list, several as an object keyed by table name."""
    plain = {name: [_plain(r) for r in records] for name, records in tables.items()}
    if len(plain) == 1:
        return next(iter(plain.values()))
    return plain


def emit(
    tables: Union[Sequence[Record], Mapping[str, Sequence[Record]]],
    output_format: OutputFormat = OutputFormat.JSON,
    path: Optional[Union[str, Path]] = None,
    meta: Optional[Mapping[str, Any]] = None,
    columns: Optional[Mapping[str, Sequence[str]]] = None,
) -> List[Path]:
    """Write result tables to `path` (stdout when None). Returns the files written.

    CSV with several tables writes `<stem>_<table>.csv` per table, or separates
    them by a blank line on stdout. JSON always writes one object.
    """
    if not isinstance(tables, Mapping):
        tables = {"records": list(tables)}
    columns = columns or {}
    output_format = OutputFormat(output_format)

    if output_format == OutputFormat.JSON:
        text = _dump_json({"meta": dict(meta or {}), "data": data_payload(tables)}) + "\n"
        return _write_text(text, path)

    if path is None or len(tables) == 1:
        buf = io.StringIO(newline="")
        for i, (name, records) in enumerate(tables.items()):
            if i:
                buf.write("\r\n")
            write_csv_table(records, buf, columns.get(name))
        return _write_text(buf.getvalue(), path)

    path = Path(path)
    written = []
    for name, records in tables.items():
        target = path.with_name(f"{path.stem}_{name}.csv")
        buf = io.StringIO(newline="")
        write_csv_table(records, buf, columns.get(name))
        written += _write_text(buf.getvalue(), target)
    return written


def _write_text(text: str, path: Optional[Union[str, Path]]) -> List[Path]:
    if path is None:
        sys.stdout.write(text)
        sys.stdout.flush()
        return []
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as f:
        f.write(text)
    logger.info("wrote %s", path)
    return [path]


def read_records_csv(path: Union[str, Path]) -> pd.DataFrame:
    """Read an emitted CSV back with exact float round trip."""
    return pd.read_csv(path, float_precision="round_trip")

