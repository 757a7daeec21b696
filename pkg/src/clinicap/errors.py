"""Exception hierarchy shared across the engine.

Every error the pipeline can raise deliberately derives from ClinicapError so
the CLI and the HTTP layer can map failures to exit codes / status codes
without string matching.
"""


class ClinicapError(Exception):
    """Base class for all engine errors."""


class ConfigError(ClinicapError):
    """Invalid configuration value (synthetic generator, lens params, ...)."""


class UnsortedHistoryError(ClinicapError):
    """A per-person test history was not sorted by date ascending."""


class ReferentialError(ClinicapError):
    """Clinics reference units that do not exist in the census registry."""

    def __init__(self, clinic_ids):
        self.clinic_ids = sorted(clinic_ids)
        super().__init__(f"clinics reference unknown units: {', '.join(self.clinic_ids)}")


class DuplicateRowsError(ClinicapError):
    """Two raw count rows share the same (unit_kind, unit_id, date, kind)."""


class UnknownUnitError(ClinicapError):
    """Queried unit id is not present in the dataset."""


class NoClinicsError(ClinicapError):
    """The unit has no clinics, so no clinic/unit relation exists."""


class ChecksumError(ClinicapError):
    """Snapshot payload does not match its embedded checksum."""


class SchemaVersionError(ClinicapError):
    """Snapshot (or model) file was written with an incompatible version."""


class SchemaMismatchError(ClinicapError):
    """Model feature schema does not match the matrix / snapshot schema."""


class EmptyRangeError(ClinicapError):
    """A date range is empty or inverted."""


class ForeignClinicError(ClinicapError):
    """A scenario edit references a clinic outside the scenario's unit."""
