"""Shot dataset files: JSONL with a header line and one record per shot.

Header: {"n_qubits": <record width>, "token_scheme": "pauli6"|"computational",
"master_seed": ..., "source": "device_sim"|"model"}. Records carry
{"ham_id", "t_index", "mode", "bases"? , "bits"} with "bases" present exactly
in pauli6 mode. Files are UTF-8 with LF line endings and a stable key order,
so identical runs produce identical bytes.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

from ..shadows import ShotRecord

SOURCES = ("device_sim", "model")


class SchemaError(ValueError):
    pass


@dataclass(frozen=True)
class DatasetHeader:
    n_qubits: int
    token_scheme: str
    master_seed: int
    source: str = "device_sim"

    def __post_init__(self):
        if self.token_scheme not in ("pauli6", "computational"):
            raise SchemaError(f"bad token_scheme {self.token_scheme!r}")
        if self.source not in SOURCES:
            raise SchemaError(f"bad source {self.source!r}")


@dataclass(frozen=True)
class ShotEntry:
    ham_id: int
    t_index: int
    record: ShotRecord | str  # ShotRecord in pauli6 mode, bitstring otherwise


def _record_line(header: DatasetHeader, entry: ShotEntry) -> str:
    if header.token_scheme == "pauli6":
        rec: ShotRecord = entry.record
        doc = {"ham_id": entry.ham_id, "t_index": entry.t_index,
               "mode": "pauli6", "bases": rec.bases, "bits": rec.bits}
    else:
        doc = {"ham_id": entry.ham_id, "t_index": entry.t_index,
               "mode": "computational", "bits": entry.record}
    return json.dumps(doc)


def write_shotfile(path, header: DatasetHeader, entries) -> None:
    head = {"n_qubits": header.n_qubits, "token_scheme": header.token_scheme,
            "master_seed": header.master_seed, "source": header.source}
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(head) + "\n")
        for entry in entries:
            fh.write(_record_line(header, entry) + "\n")


def read_shotfile(path) -> tuple[DatasetHeader, list[ShotEntry]]:
    with open(path, "r", encoding="utf-8") as fh:
        first = fh.readline()
        if not first.strip():
            raise SchemaError(f"{path}: missing header line")
        head = json.loads(first)
        try:
            header = DatasetHeader(head["n_qubits"], head["token_scheme"],
                                   head["master_seed"], head.get("source", "device_sim"))
        except KeyError as exc:
            raise SchemaError(f"{path}: header missing {exc}") from None
        entries = []
        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            doc = json.loads(line)
            entries.append(_parse_record(header, doc, path, lineno))
    return header, entries


def _parse_record(header: DatasetHeader, doc: dict, path, lineno: int) -> ShotEntry:
    try:
        mode = doc["mode"]
        bits = doc["bits"]
        ham_id = doc["ham_id"]
        t_index = doc["t_index"]
    except KeyError as exc:
        raise SchemaError(f"{path}:{lineno}: record missing {exc}") from None
    if mode != header.token_scheme:
        raise SchemaError(f"{path}:{lineno}: record mode {mode!r} does not "
                          f"match header {header.token_scheme!r}")
    if len(bits) != header.n_qubits:
        raise SchemaError(f"{path}:{lineno}: bits width {len(bits)} != "
                          f"{header.n_qubits}")
    if mode == "pauli6":
        if "bases" not in doc:
            raise SchemaError(f"{path}:{lineno}: pauli6 record without bases")
        if len(doc["bases"]) != header.n_qubits:
            raise SchemaError(f"{path}:{lineno}: bases width mismatch")
        return ShotEntry(ham_id, t_index, ShotRecord(doc["bases"], bits))
    if "bases" in doc:
        raise SchemaError(f"{path}:{lineno}: computational record with bases")
    if any(c not in "01" for c in bits):
        raise SchemaError(f"{path}:{lineno}: bad bits {bits!r}")
    return ShotEntry(ham_id, t_index, bits)


def group_by_instance(entries) -> dict[int, dict[int, list]]:
    """{ham_id: {t_index: [record...]}} preserving file order."""
    out: dict[int, dict[int, list]] = {}
    for e in entries:
        out.setdefault(e.ham_id, {}).setdefault(e.t_index, []).append(e.record)
    return out


def validate_shotfile(path) -> DatasetHeader:
    """Parse the whole file, raising SchemaError on any malformed line."""
    header, _ = read_shotfile(path)
    return header
