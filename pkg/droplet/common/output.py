######################################################################
# Copyright 2024 The droplet-stability Authors. All Rights Reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
# https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
######################################################################

"""
Artifact writers

Every artifact starts with the resolved configuration so a run can be
reproduced from its output alone. Files contain no timestamps; identical
configurations give byte-identical artifacts.
"""
import csv
import json
import logging
from pathlib import Path
from typing import Any, Iterable, Optional, Sequence
import numpy as np

logger = logging.getLogger(__name__)


def to_jsonable(value: Any) -> Any:
    """Converts numpy scalars/arrays and complex numbers into JSON friendly values"""
    if isinstance(value, dict):
        return {str(key): to_jsonable(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(item) for item in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, (complex, np.complexfloating)):
        return [float(value.real), float(value.imag)]
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    return value


def dumps(payload: Any) -> str:
    """Deterministic JSON text"""
    return json.dumps(to_jsonable(payload), sort_keys=True)


def ensure_dir(out_dir: str) -> Path:
    """Creates the output directory if needed"""
    path = Path(out_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _cell(value: Any) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(to_jsonable(value))


def write_csv(
    path: Path,
    columns: Sequence[str],
    rows: Iterable[Sequence[Any]],
    config_lines: Sequence[str] = (),
    summary: Optional[dict] = None,
) -> Path:
    """Writes a CSV table framed by '# key=value' header lines and a trailing '# summary {json}' record"""
    with open(path, "w", newline="", encoding="utf-8") as stream:
        for line in config_lines:
            stream.write(f"# {line}\n")
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(value) for value in row])
        if summary is not None:
            stream.write(f"# summary {dumps(summary)}\n")
    logger.info("Wrote %s", path)
    return path


def write_json(path: Path, payload: dict, config: Optional[dict] = None) -> Path:
    """Writes a JSON document carrying the resolved configuration under 'config'"""
    document = dict(payload)
    if config is not None:
        document["config"] = config
    with open(path, "w", encoding="utf-8") as stream:
        json.dump(to_jsonable(document), stream, sort_keys=True, indent=2)
        stream.write("\n")
    logger.info("Wrote %s", path)
    return path


def write_table(
    out_dir: str,
    name: str,
    columns: Sequence[str],
    rows: Sequence[Sequence[Any]],
    config: dict,
    summary: Optional[dict] = None,
    fmt: str = "csv",
) -> Path:
    """Writes a table as name.csv or name.json depending on fmt"""
    folder = ensure_dir(out_dir)
    if fmt == "json":
        payload = {"columns": list(columns), "rows": [list(row) for row in rows]}
        if summary is not None:
            payload["summary"] = summary
        return write_json(folder / f"{name}.json", payload, config=config)
    lines = [f"{key}={value}" for key, value in config.items()]
    return write_csv(folder / f"{name}.csv", columns, rows, config_lines=lines, summary=summary)


def write_text(path: Path, text: str, config: Optional[dict] = None) -> Path:
    """Writes a plain-text record preceded by '# key=value' header lines"""
    with open(path, "w", encoding="utf-8") as stream:
        for key, value in (config or {}).items():
            stream.write(f"# {key}={value}\n")
        stream.write(text)
    logger.info("Wrote %s", path)
    return path
