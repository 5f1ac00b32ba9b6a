"""Linkage records and their CSV representation.

A corpus is two databases (master and update) plus the ground truth mapping
each update record to its master record, or to nothing when it is
unmatchable. Empty CSV cells mean a missing value.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, fields
from typing import TYPE_CHECKING, Optional

from .errors import InvalidSpec, MalformedInput

if TYPE_CHECKING:
    import pathlib

_LOGGER = logging.getLogger(__name__)

MASTER_FILE = "master.csv"
UPDATE_FILE = "update.csv"
TRUTH_FILE = "truth.csv"

_TRUTH_COLUMNS = ("update_id", "master_id")


@dataclass(frozen=True)
class LinkageRecord:
    """One physician record. Every field except id and last may be missing."""

    id: str
    last: str
    first: Optional[str] = None
    middle_initial: Optional[str] = None
    street: Optional[str] = None
    phone: Optional[str] = None
    specialty: Optional[str] = None
    grad_year: Optional[int] = None

    def __post_init__(self) -> None:
        if not self.last:
            raise InvalidSpec(f"Record {self.id} has no last name")

    def to_row(self) -> dict[str, str]:
        return {
            f.name: "" if getattr(self, f.name) is None else str(getattr(self, f.name))
            for f in fields(self)
        }

    @classmethod
    def from_row(cls, row: dict[str, str]) -> LinkageRecord:
        def optional(name: str) -> Optional[str]:
            value = row.get(name, "")
            return value if value != "" else None

        grad_year = optional("grad_year")
        return cls(
            id=row["id"],
            last=row["last"],
            first=optional("first"),
            middle_initial=optional("middle_initial"),
            street=optional("street"),
            phone=optional("phone"),
            specialty=optional("specialty"),
            grad_year=int(grad_year) if grad_year is not None else None,
        )


@dataclass(frozen=True)
class LinkageCorpus:
    """Master and update databases with the ground-truth mapping."""

    master: list[LinkageRecord]
    update: list[LinkageRecord]
    # update id -> master id, None for unmatchable update records
    truth: dict[str, Optional[str]]

    @property
    def matchable_count(self) -> int:
        return sum(1 for master_id in self.truth.values() if master_id is not None)

    def write_csv(self, directory: pathlib.Path) -> None:
        """Write master.csv, update.csv and truth.csv into a directory."""
        directory.mkdir(parents=True, exist_ok=True)
        _write_records(directory / MASTER_FILE, self.master)
        _write_records(directory / UPDATE_FILE, self.update)
        with (directory / TRUTH_FILE).open("w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(_TRUTH_COLUMNS)
            for update_id, master_id in self.truth.items():
                writer.writerow([update_id, master_id or ""])
        _LOGGER.debug(
            "Wrote %d master and %d update records to %s",
            len(self.master),
            len(self.update),
            directory,
        )

    @classmethod
    def read_csv(cls, directory: pathlib.Path) -> LinkageCorpus:
        """Read a corpus written by write_csv.

        The truth file is optional; without it every update is unmatchable.
        """
        master = _read_records(directory / MASTER_FILE)
        update = _read_records(directory / UPDATE_FILE)
        truth: dict[str, Optional[str]] = {record.id: None for record in update}
        truth_path = directory / TRUTH_FILE
        if truth_path.exists():
            with truth_path.open(newline="") as f:
                try:
                    for row in csv.DictReader(f):
                        truth[row["update_id"]] = row["master_id"] or None
                except KeyError as err:
                    raise MalformedInput(f"{truth_path}: no column {err}") from err
        return cls(master=master, update=update, truth=truth)


def _write_records(path: pathlib.Path, records: list[LinkageRecord]) -> None:
    with path.open("w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=[fl.name for fl in fields(LinkageRecord)])
        writer.writeheader()
        writer.writerows(record.to_row() for record in records)


def _read_records(path: pathlib.Path) -> list[LinkageRecord]:
    with path.open(newline="") as f:
        try:
            return [LinkageRecord.from_row(row) for row in csv.DictReader(f)]
        except (KeyError, TypeError, ValueError) as err:
            raise MalformedInput(f"{path}: {err}") from err
