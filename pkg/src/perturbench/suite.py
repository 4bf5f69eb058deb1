"""The 69-group benchmark suite: canonical enumeration, generation, manifest.

Group naming is a pure function of the perturbation chain: ``SP<d>`` for salt
& pepper density d, ``GA<v>`` for Gaussian variance v, ``RL<a>``/``RR<a>`` for
counterclockwise/clockwise rotation by a degrees, concatenated in application
order; the empty chain is named ``clean``. Severities print without trailing
zeros (``SP0.1GA0.15``, ``RR30``).

Suite layout on disk::

    <out_dir>/manifest.json
    <out_dir>/<group_id>_<name>/<index>.png
    <out_dir>/<group_id>_<name>/labels.txt     # one integer per line

The per-group digest is SHA-256 over the concatenation, in index order, of
each image's payload: a 12-byte header (width, height, channels as unsigned
32-bit big-endian) followed by the raw interleaved pixel bytes. Hex digests
are lowercase. Digests therefore track pixel content, not PNG container
bytes.
"""

from __future__ import annotations

import hashlib
import json
import re
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from . import SPEC_VERSION
from .errors import DomainError, FormatError, PerturbenchError, StructureError, VersionError
from .perturb import Gaussian, PerturbationChain, PerturbationStep, Rotation, SaltPepper, apply_chain
from .raster import LabeledDataset, RasterImage, SeedSpec, load_png, save_png

NOISE_LEVELS = (0.0, 0.1, 0.15, 0.2)
ROTATION_LEVELS = (-60.0, -30.0, 0.0, 30.0, 60.0)
GROUP_COUNT = 69


class Family(Enum):
    CLEAN = "CLEAN"
    SP_GA = "SP_GA"
    GA_SP = "GA_SP"
    SP_RO = "SP_RO"
    RO_SP = "RO_SP"


FAMILY_SIZES = {
    Family.CLEAN: 1,
    Family.SP_GA: 15,
    Family.GA_SP: 15,
    Family.SP_RO: 19,
    Family.RO_SP: 19,
}


@dataclass(frozen=True)
class GroupSpec:
    group_id: int
    name: str
    chain: PerturbationChain
    family: Family


def _fmt(value: float) -> str:
    return f"{value:g}"


def step_token(step: PerturbationStep) -> str:
    if isinstance(step, SaltPepper):
        return f"SP{_fmt(step.density)}"
    if isinstance(step, Gaussian):
        return f"GA{_fmt(step.variance)}"
    if isinstance(step, Rotation):
        side = "RL" if step.degrees < 0 else "RR"
        return f"{side}{_fmt(abs(step.degrees))}"
    raise DomainError(f"unknown step {step!r}")


def chain_name(chain: PerturbationChain) -> str:
    if len(chain) == 0:
        return "clean"
    return "".join(step_token(s) for s in chain)


_TOKEN_RE = re.compile(r"(SP|GA|RL|RR)(\d+(?:\.\d+)?)")


def parse_group_name(name: str) -> PerturbationChain:
    """Inverse of :func:`chain_name`; raises on anything it did not produce."""
    if name == "clean":
        return PerturbationChain()
    if not name:
        raise FormatError("empty group name")
    steps: list[PerturbationStep] = []
    pos = 0
    while pos < len(name):
        m = _TOKEN_RE.match(name, pos)
        if m is None:
            raise FormatError(f"unparseable group name {name!r} at offset {pos}")
        kind, value = m.group(1), float(m.group(2))
        if kind == "SP":
            steps.append(SaltPepper(value))
        elif kind == "GA":
            steps.append(Gaussian(value))
        elif kind == "RL":
            steps.append(Rotation(-value))
        else:
            steps.append(Rotation(value))
        pos = m.end()
    return PerturbationChain(steps=tuple(steps))


def _two_factor_chain(first: PerturbationStep | None, second: PerturbationStep | None) -> PerturbationChain:
    # zero-severity factors degenerate out of the chain
    steps = [s for s in (first, second) if s is not None]
    return PerturbationChain(steps=tuple(steps))


def _sp(level: float) -> PerturbationStep | None:
    return SaltPepper(level) if level > 0 else None


def _ga(level: float) -> PerturbationStep | None:
    return Gaussian(level) if level > 0 else None


def _ro(level: float) -> PerturbationStep | None:
    return Rotation(level) if level != 0 else None


def enumerate_groups() -> list[GroupSpec]:
    """The canonical 69 groups, identical on every call and platform.

    Order: group 1 is clean; 2-16 the SP-then-GA grid (outer salt & pepper
    ascending, inner Gaussian ascending, both-zero cell excluded); 17-31 the
    GA-then-SP grid likewise; 32-50 the SP-then-rotation grid; 51-69 the
    rotation-then-SP grid. A zero first factor leaves a single-step chain, so
    e.g. plain ``GA0.1`` appears in both noise grids under different ids.
    """
    groups: list[GroupSpec] = []

    def add(chain: PerturbationChain, family: Family) -> None:
        groups.append(
            GroupSpec(
                group_id=len(groups) + 1,
                name=chain_name(chain),
                chain=chain,
                family=family,
            )
        )

    add(PerturbationChain(), Family.CLEAN)
    for sp in NOISE_LEVELS:
        for ga in NOISE_LEVELS:
            if sp == 0 and ga == 0:
                continue
            add(_two_factor_chain(_sp(sp), _ga(ga)), Family.SP_GA)
    for ga in NOISE_LEVELS:
        for sp in NOISE_LEVELS:
            if ga == 0 and sp == 0:
                continue
            add(_two_factor_chain(_ga(ga), _sp(sp)), Family.GA_SP)
    for sp in NOISE_LEVELS:
        for ro in ROTATION_LEVELS:
            if sp == 0 and ro == 0:
                continue
            add(_two_factor_chain(_sp(sp), _ro(ro)), Family.SP_RO)
    for ro in ROTATION_LEVELS:
        for sp in NOISE_LEVELS:
            if ro == 0 and sp == 0:
                continue
            add(_two_factor_chain(_ro(ro), _sp(sp)), Family.RO_SP)

    assert len(groups) == GROUP_COUNT
    return groups


def group_by_name(name: str) -> GroupSpec:
    """Lowest-id canonical group whose name matches (names repeat across families)."""
    for spec in enumerate_groups():
        if spec.name == name:
            return spec
    raise DomainError(f"{name!r} is not a canonical group name")


def step_to_json(step: PerturbationStep) -> dict:
    if isinstance(step, SaltPepper):
        return {"kind": "salt_pepper", "density": step.density}
    if isinstance(step, Gaussian):
        return {"kind": "gaussian", "variance": step.variance}
    if isinstance(step, Rotation):
        return {"kind": "rotation", "degrees": step.degrees}
    raise DomainError(f"unknown step {step!r}")


def step_from_json(obj: dict) -> PerturbationStep:
    kind = obj.get("kind")
    if kind == "salt_pepper":
        return SaltPepper(float(obj["density"]))
    if kind == "gaussian":
        return Gaussian(float(obj["variance"]))
    if kind == "rotation":
        return Rotation(float(obj["degrees"]))
    raise FormatError(f"unknown perturbation kind {kind!r}")


@dataclass(frozen=True)
class SuiteSource:
    dataset_id: str
    images_per_group: int
    indices: tuple[int, ...]
    width: int
    height: int
    channels: int
    class_names: tuple[str, ...]


@dataclass(frozen=True)
class SuiteManifest:
    spec_version: str
    master_seed: int
    source: SuiteSource
    groups: tuple[GroupSpec, ...]
    digests: tuple[str, ...]  # hex, indexed like groups
    aliases: dict[int, str] | None = None  # optional external numbering by group_id

    def group_dir_name(self, spec: GroupSpec) -> str:
        return f"{spec.group_id}_{spec.name}"


def image_payload(image: RasterImage) -> bytes:
    header = struct.pack(">III", image.width, image.height, image.channels)
    return header + image.data


def group_digest(images: list[RasterImage]) -> str:
    h = hashlib.sha256()
    for img in images:
        h.update(image_payload(img))
    return h.hexdigest()


def corrupt_dataset(
    dataset: LabeledDataset, chain: PerturbationChain, seeds: SeedSpec, group_id: int
) -> LabeledDataset:
    """Apply one group's chain to every image; labels pass through unchanged."""
    images = tuple(
        apply_chain(img, chain, seeds, group_id, i)
        for i, img in enumerate(dataset.images)
    )
    return LabeledDataset(images=images, labels=dataset.labels, class_names=dataset.class_names)


def _write_group(
    dataset: LabeledDataset,
    spec: GroupSpec,
    seeds: SeedSpec,
    out_dir: Path,
    dir_name: str,
) -> str:
    gdir = out_dir / dir_name
    gdir.mkdir(parents=True, exist_ok=True)
    corrupted = corrupt_dataset(dataset, spec.chain, seeds, spec.group_id)
    for i, img in enumerate(corrupted.images):
        save_png(img, str(gdir / f"{i}.png"))
    with open(gdir / "labels.txt", "w", encoding="utf-8", newline="\n") as fh:
        for lab in corrupted.labels:
            fh.write(f"{lab}\n")
    return group_digest(list(corrupted.images))


def generate_suite(
    dataset: LabeledDataset,
    master_seed: int,
    images_per_group: int,
    out_dir: str | Path,
    dataset_id: str = "unspecified",
    source_indices: list[int] | None = None,
    workers: int = 1,
    aliases: dict[int, str] | None = None,
) -> SuiteManifest:
    """Write all 69 corrupted views of the dataset's first ``images_per_group``
    images, plus the manifest that makes the result verifiable.

    ``source_indices`` records where those images came from in the original
    source (for train/test disjointness checks); it does not re-index the
    dataset. Regeneration with identical inputs is byte-identical, serial or
    parallel.
    """
    if images_per_group < 1:
        raise DomainError(f"images_per_group must be >= 1, got {images_per_group}")
    if len(dataset) < images_per_group:
        raise DomainError(
            f"dataset has {len(dataset)} images, need {images_per_group}"
        )
    if source_indices is not None and len(source_indices) != images_per_group:
        raise DomainError("source_indices length must equal images_per_group")

    base = dataset.subset(list(range(images_per_group)))
    out_path = Path(out_dir)
    out_path.mkdir(parents=True, exist_ok=True)
    seeds = SeedSpec(master_seed)
    groups = enumerate_groups()
    first = base.images[0]

    def job(spec: GroupSpec) -> str:
        return _write_group(base, spec, seeds, out_path, f"{spec.group_id}_{spec.name}")

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            digests = list(pool.map(job, groups))
    else:
        digests = [job(spec) for spec in groups]

    indices = tuple(source_indices) if source_indices is not None else tuple(range(images_per_group))
    manifest = SuiteManifest(
        spec_version=SPEC_VERSION,
        master_seed=master_seed,
        source=SuiteSource(
            dataset_id=dataset_id,
            images_per_group=images_per_group,
            indices=indices,
            width=first.width,
            height=first.height,
            channels=first.channels,
            class_names=base.class_names,
        ),
        groups=tuple(groups),
        digests=tuple(digests),
        aliases=dict(aliases) if aliases else None,
    )
    save_manifest(manifest, out_path / "manifest.json")
    return manifest


def manifest_to_json(manifest: SuiteManifest) -> dict:
    groups = []
    for spec, digest in zip(manifest.groups, manifest.digests):
        entry = {
            "group_id": spec.group_id,
            "name": spec.name,
            "family": spec.family.value,
            "chain": [step_to_json(s) for s in spec.chain],
            "digest": digest,
        }
        if manifest.aliases and spec.group_id in manifest.aliases:
            entry["alias"] = manifest.aliases[spec.group_id]
        groups.append(entry)
    return {
        "spec_version": manifest.spec_version,
        "master_seed": manifest.master_seed,
        "source": {
            "dataset_id": manifest.source.dataset_id,
            "images_per_group": manifest.source.images_per_group,
            "indices": list(manifest.source.indices),
            "width": manifest.source.width,
            "height": manifest.source.height,
            "channels": manifest.source.channels,
            "class_names": list(manifest.source.class_names),
        },
        "groups": groups,
    }


def save_manifest(manifest: SuiteManifest, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(manifest_to_json(manifest), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _validate_groups(groups: tuple[GroupSpec, ...]) -> None:
    if len(groups) != GROUP_COUNT:
        raise StructureError(f"manifest has {len(groups)} groups, expected {GROUP_COUNT}")
    canonical = enumerate_groups()
    for got, want in zip(groups, canonical):
        if (got.group_id, got.name, got.family, got.chain) != (
            want.group_id, want.name, want.family, want.chain,
        ):
            raise StructureError(
                f"group {got.group_id} ({got.name}) deviates from the canonical enumeration"
            )
    sizes: dict[Family, int] = {}
    for g in groups:
        sizes[g.family] = sizes.get(g.family, 0) + 1
    if sizes != FAMILY_SIZES:
        raise StructureError(f"family sizes {sizes} != {FAMILY_SIZES}")


def load_manifest(path: str | Path) -> SuiteManifest:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid manifest JSON: {exc}") from exc
    try:
        version = doc["spec_version"]
        if version != SPEC_VERSION:
            raise VersionError(f"{path}: spec_version {version!r}, expected {SPEC_VERSION!r}")
        src = doc["source"]
        groups = []
        digests = []
        aliases: dict[int, str] = {}
        for entry in doc["groups"]:
            chain = PerturbationChain(
                steps=tuple(step_from_json(s) for s in entry["chain"])
            )
            groups.append(
                GroupSpec(
                    group_id=int(entry["group_id"]),
                    name=entry["name"],
                    chain=chain,
                    family=Family(entry["family"]),
                )
            )
            digests.append(entry["digest"])
            if "alias" in entry:
                aliases[int(entry["group_id"])] = entry["alias"]
        manifest = SuiteManifest(
            spec_version=version,
            master_seed=int(doc["master_seed"]),
            source=SuiteSource(
                dataset_id=src["dataset_id"],
                images_per_group=int(src["images_per_group"]),
                indices=tuple(int(i) for i in src["indices"]),
                width=int(src["width"]),
                height=int(src["height"]),
                channels=int(src["channels"]),
                class_names=tuple(src["class_names"]),
            ),
            groups=tuple(groups),
            digests=tuple(digests),
            aliases=aliases or None,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"{path}: malformed manifest: {exc}") from exc
    _validate_groups(manifest.groups)
    return manifest


def load_alias_map(path: str | Path) -> dict[int, str]:
    """Optional mapping from canonical group id to an external numbering label."""
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict):
        raise FormatError(f"{path}: alias map must be a JSON object")
    out: dict[int, str] = {}
    for key, value in doc.items():
        gid = int(key)
        if not 1 <= gid <= GROUP_COUNT:
            raise FormatError(f"{path}: alias key {key!r} is not a group id")
        out[gid] = str(value)
    return out


def verify_suite(manifest: SuiteManifest, suite_dir: str | Path) -> list[tuple[int, str]]:
    """Re-hash every group payload; return (group_id, message) per mismatch."""
    problems: list[tuple[int, str]] = []
    base = Path(suite_dir)
    n = manifest.source.images_per_group
    for spec, want in zip(manifest.groups, manifest.digests):
        gdir = base / manifest.group_dir_name(spec)
        if not gdir.is_dir():
            problems.append((spec.group_id, f"missing group directory {gdir.name}"))
            continue
        try:
            images = [load_png(str(gdir / f"{i}.png")) for i in range(n)]
        except (OSError, PerturbenchError) as exc:
            problems.append((spec.group_id, f"unreadable image: {exc}"))
            continue
        got = group_digest(images)
        if got != want:
            problems.append((spec.group_id, f"digest mismatch: {got} != {want}"))
    return problems


def check_disjoint(
    dataset_id_a: str,
    indices_a: tuple[int, ...] | list[int],
    dataset_id_b: str,
    indices_b: tuple[int, ...] | list[int],
) -> None:
    """Error if two index sets over the same source share any image."""
    if dataset_id_a != dataset_id_b:
        return
    shared = sorted(set(indices_a) & set(indices_b))
    if shared:
        raise StructureError(
            f"train/test overlap on {dataset_id_a}: shared source indices {shared[:8]}"
            + ("..." if len(shared) > 8 else "")
        )
