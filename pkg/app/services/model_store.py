"""
Model store: JSON persistence of mode model chains.
"""

import hashlib
import json
import os
import tempfile
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional, Union

import numpy as np
import structlog
from pydantic import ValidationError

from app.core.exceptions import (
    ArchiveExistsError,
    ArchiveFormatError,
    ArchiveInvariantError,
    ArchiveVersionError,
)
from app.schemas.model import ARCHIVE_FORMAT_VERSION, ModeModel, ModelArchive, Provenance
from app.schemas.solver import SolverConfig

logger = structlog.get_logger()

PathLike = Union[str, Path]

# Relative slack for rounding in symmetric and PSD checks
XI_TOLERANCE = 1e-9


class ModelStore:
    """Service for saving and loading model archives."""

    def new_archive(
        self,
        model: ModeModel,
        config: SolverConfig,
        seed: Optional[int] = None,
        source: Optional[str] = None,
    ) -> ModelArchive:
        """Archive holding a single first-mode model."""
        provenance = Provenance(
            seeds={"mode1": seed} if seed is not None else {},
            timestamps=[_now()],
            sources=[source] if source else [],
        )
        archive = ModelArchive(models=[model], config=config, provenance=provenance)
        self.validate_chain(archive)
        return archive

    def append_model(
        self,
        archive: ModelArchive,
        model: ModeModel,
        seed: Optional[int] = None,
        source: Optional[str] = None,
    ) -> ModelArchive:
        """New archive with model appended to the chain."""
        seeds = dict(archive.provenance.seeds)
        if seed is not None:
            seeds[f"mode{model.mode_index}"] = seed
        provenance = Provenance(
            seeds=seeds,
            timestamps=[*archive.provenance.timestamps, _now()],
            sources=[*archive.provenance.sources, *([source] if source else [])],
        )
        extended = ModelArchive(
            format_version=archive.format_version,
            models=[*archive.models, model],
            config=archive.config,
            provenance=provenance,
        )
        self.validate_chain(extended)
        return extended

    def validate_chain(self, archive: ModelArchive) -> None:
        """Check mode indices run 1, 2, ..., shapes agree and every model satisfies its invariants."""
        if not archive.models:
            raise ArchiveInvariantError("archive holds no models")

        first = archive.models[0]
        for position, model in enumerate(archive.models, start=1):
            if model.mode_index != position:
                raise ArchiveInvariantError(
                    f"mode indices must run 1, 2, ...; position {position} holds mode {model.mode_index}"
                )
            if model.n_variables != first.n_variables or model.n_components != first.n_components:
                raise ArchiveInvariantError(
                    f"mode {model.mode_index} has shape ({model.n_variables}, {model.n_components}), "
                    f"expected ({first.n_variables}, {first.n_components})"
                )
            _check_model(model)

        for earlier, later in zip(archive.models, archive.models[1:]):
            if np.any(later.accumulated_importance < earlier.accumulated_importance):
                raise ArchiveInvariantError(
                    f"accumulated importance decreases from mode {earlier.mode_index} to {later.mode_index}"
                )

    def dumps(self, archive: ModelArchive) -> str:
        """Canonical JSON text of an archive."""
        return archive.model_dump_json(by_alias=True, indent=2) + "\n"

    def save_chain(self, archive: ModelArchive, path: PathLike, overwrite: bool = False) -> Path:
        """Write an archive; refuses to replace an existing file unless overwrite is set."""
        self.validate_chain(archive)
        path = Path(path)
        payload = self.dumps(archive).encode("utf-8")

        if overwrite:
            fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
            try:
                with os.fdopen(fd, "wb") as handle:
                    handle.write(payload)
                os.replace(tmp_name, path)
            except BaseException:
                Path(tmp_name).unlink(missing_ok=True)
                raise
        else:
            try:
                with path.open("xb") as handle:
                    handle.write(payload)
            except FileExistsError as exc:
                logger.error("archive_exists", path=str(path))
                raise ArchiveExistsError(f"{path} already exists; pass overwrite to replace it") from exc

        logger.info(
            "archive_saved",
            path=str(path),
            n_models=len(archive.models),
            sha256=hashlib.sha256(payload).hexdigest(),
        )
        return path

    def loads(self, text: Union[str, bytes], origin: str = "<archive>") -> ModelArchive:
        """Parse and validate archive text."""
        try:
            document = json.loads(text)
        except (json.JSONDecodeError, UnicodeDecodeError) as exc:
            raise ArchiveFormatError(f"{origin}: malformed archive: {exc}") from exc
        if not isinstance(document, dict):
            raise ArchiveFormatError(f"{origin}: archive must be a JSON object")
        if "format_version" not in document:
            raise ArchiveFormatError(f"{origin}: missing format_version")

        version = document["format_version"]
        if version != ARCHIVE_FORMAT_VERSION:
            raise ArchiveVersionError(
                f"{origin}: unsupported format_version {version!r}, expected {ARCHIVE_FORMAT_VERSION}"
            )

        try:
            archive = ModelArchive.model_validate(document)
        except ValidationError as exc:
            # Validator failures are content problems; anything else is structure
            if all(error["type"] == "value_error" for error in exc.errors()):
                raise ArchiveInvariantError(f"{origin}: {exc}") from exc
            raise ArchiveFormatError(f"{origin}: malformed archive: {exc}") from exc

        self.validate_chain(archive)
        return archive

    def load_chain(self, path: PathLike) -> ModelArchive:
        """Read and validate an archive file."""
        path = Path(path)
        archive = self.loads(path.read_bytes(), origin=str(path))
        logger.info("archive_loaded", path=str(path), n_models=len(archive.models))
        return archive


def _check_model(model: ModeModel) -> None:
    """Nonnegative importances, a symmetric PSD xi and a mode-1 accumulation equal to its importance."""
    label = f"mode {model.mode_index}"
    for name in ("importance", "accumulated_importance"):
        values = getattr(model, name)
        if not np.all(np.isfinite(values)) or np.any(values < 0):
            raise ArchiveInvariantError(f"{label}: {name} must be finite and nonnegative")

    xi = model.xi
    if not np.all(np.isfinite(xi)):
        raise ArchiveInvariantError(f"{label}: xi must be finite")
    scale = max(1.0, float(np.max(np.abs(xi))))
    if not np.allclose(xi, xi.T, rtol=0.0, atol=XI_TOLERANCE * scale):
        raise ArchiveInvariantError(f"{label}: xi must be symmetric")
    if float(np.min(np.linalg.eigvalsh(0.5 * (xi + xi.T)))) < -XI_TOLERANCE * scale:
        raise ArchiveInvariantError(f"{label}: xi must be positive semidefinite")

    if model.mode_index == 1 and not np.array_equal(model.accumulated_importance, model.importance):
        raise ArchiveInvariantError("mode 1: accumulated importance must equal its importance")


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


# Global model store instance
model_store = ModelStore()
