"""Syndrome-symptom world model: types, validation, JSON I/O and generation."""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema

from .rng import stream

PREVALENCE_TOL = 1e-9
PAPER_HORIZON_DAYS = 4 * 365
PAPER_LINK_CUTOFF = 0.15


class SymptomKind(str, enum.Enum):
    LATENT = "Latent"
    PERMANENT_VISIBLE = "PermanentVisible"
    RECURRENT = "Recurrent"


@dataclass(frozen=True)
class SymptomSpec:
    id: int
    name: str
    kind: SymptomKind


@dataclass(frozen=True)
class SymptomLink:
    """How one syndrome produces one symptom.

    The onset day is a normal draw left-truncated at 0. Episode rates are per
    day and only meaningful for recurrent symptoms.
    """

    syndrome_id: int
    symptom_id: int
    occur_prob: float
    onset_mean_days: float
    onset_sd_days: float
    episode_on_rate: float | None = None
    episode_off_rate: float | None = None


@dataclass(frozen=True)
class SyndromeSpec:
    id: int
    name: str
    is_rare: bool
    prevalence: float


@dataclass(frozen=True)
class ScenarioConfig:
    syndromes: tuple[SyndromeSpec, ...]
    symptoms: tuple[SymptomSpec, ...]
    links: tuple[SymptomLink, ...]
    horizon_days: int
    _by_syndrome: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "syndromes", tuple(self.syndromes))
        object.__setattr__(self, "symptoms", tuple(self.symptoms))
        object.__setattr__(self, "links", tuple(self.links))
        grouped: dict[int, list[SymptomLink]] = {}
        for link in self.links:
            grouped.setdefault(link.syndrome_id, []).append(link)
        object.__setattr__(
            self,
            "_by_syndrome",
            {k: tuple(sorted(v, key=lambda l: l.symptom_id)) for k, v in grouped.items()},
        )

    @property
    def n_symptoms(self) -> int:
        return len(self.symptoms)

    @property
    def n_syndromes(self) -> int:
        return len(self.syndromes)

    @property
    def prevalences(self) -> list[float]:
        return [s.prevalence for s in self.syndromes]

    def links_for(self, syndrome_id: int) -> tuple[SymptomLink, ...]:
        """Links of one syndrome, ordered by symptom id."""
        return self._by_syndrome.get(syndrome_id, ())

    def kind_of(self, symptom_id: int) -> SymptomKind:
        return self.symptoms[symptom_id].kind


class ScenarioFormatError(ValueError):
    """The scenario file is not valid JSON or does not follow the schema."""


class ScenarioValidationError(ValueError):
    def __init__(self, violations: list[str]):
        self.violations = list(violations)
        super().__init__("invalid scenario:\n  " + "\n  ".join(self.violations))


def _finite(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x)


def validate_scenario(config: ScenarioConfig) -> list[str]:
    """Check every invariant of a scenario.

    Returns a list of human-readable violations, each starting with the path
    of the offending field. An empty list means the scenario is usable.
    """
    out: list[str] = []

    if not isinstance(config.horizon_days, int) or config.horizon_days <= 0:
        out.append(f"horizon_days: must be a positive integer, got {config.horizon_days!r}")

    for i, sym in enumerate(config.symptoms):
        if sym.id != i:
            out.append(f"symptoms[{i}].id: ids must be contiguous 0..{len(config.symptoms) - 1}, got {sym.id}")
        if not isinstance(sym.kind, SymptomKind):
            out.append(f"symptoms[{i}].kind: unknown kind {sym.kind!r}")

    for i, syn in enumerate(config.syndromes):
        if syn.id != i:
            out.append(f"syndromes[{i}].id: ids must be contiguous 0..{len(config.syndromes) - 1}, got {syn.id}")
        if not _finite(syn.prevalence) or not 0.0 <= syn.prevalence <= 1.0:
            out.append(f"syndromes[{i}].prevalence: {syn.prevalence!r} not in [0, 1]")
    if config.syndromes:
        total = math.fsum(s.prevalence for s in config.syndromes if _finite(s.prevalence))
        if abs(total - 1.0) > PREVALENCE_TOL:
            out.append(f"syndromes[*].prevalence: prevalences sum to {total!r}, expected 1")
        rare = [s.is_rare for s in config.syndromes]
        if not any(rare):
            out.append("syndromes[*].is_rare: no rare syndrome")
        if all(rare):
            out.append("syndromes[*].is_rare: no non-rare syndrome")
    else:
        out.append("syndromes: empty")

    n_syn, n_sym = len(config.syndromes), len(config.symptoms)
    seen: dict[tuple[int, int], int] = {}
    for i, link in enumerate(config.links):
        where = f"links[{i}]"
        ids_ok = True
        if not 0 <= link.syndrome_id < n_syn:
            out.append(f"{where}.syndrome_id: {link.syndrome_id} is not a syndrome id")
            ids_ok = False
        if not 0 <= link.symptom_id < n_sym:
            out.append(f"{where}.symptom_id: {link.symptom_id} is not a symptom id")
            ids_ok = False
        pair = (link.syndrome_id, link.symptom_id)
        if pair in seen:
            out.append(
                f"{where}: duplicate (syndrome {pair[0]}, symptom {pair[1]}) pair, first seen at links[{seen[pair]}]"
            )
        else:
            seen[pair] = i
        if not _finite(link.occur_prob) or not 0.0 <= link.occur_prob <= 1.0:
            out.append(f"{where}.occur_prob: {link.occur_prob!r} not in [0, 1]")
        if not _finite(link.onset_mean_days) or link.onset_mean_days < 0:
            out.append(f"{where}.onset_mean_days: {link.onset_mean_days!r} must be finite and >= 0")
        # sigma = 0 is allowed: it gives deterministic onsets
        if not _finite(link.onset_sd_days) or link.onset_sd_days < 0:
            out.append(f"{where}.onset_sd_days: {link.onset_sd_days!r} must be finite and >= 0")
        if not ids_ok:
            continue
        rates = (link.episode_on_rate, link.episode_off_rate)
        if config.symptoms[link.symptom_id].kind is SymptomKind.RECURRENT:
            for name, rate in zip(("episode_on_rate", "episode_off_rate"), rates):
                if rate is None:
                    out.append(
                        f"{where}.{name}: missing for recurrent symptom {link.symptom_id} "
                        f"(syndrome {link.syndrome_id})"
                    )
                elif not _finite(rate) or rate <= 0:
                    out.append(f"{where}.{name}: {rate!r} must be > 0")
        elif any(r is not None for r in rates):
            out.append(
                f"{where}.episode_on_rate: episode rates given for non-recurrent symptom {link.symptom_id} "
                f"(syndrome {link.syndrome_id})"
            )
    return out


# -- JSON ------------------------------------------------------------------

def _schema() -> dict:
    text = resources.files("rarepath").joinpath("scenario.schema.json").read_text(encoding="utf-8")
    return json.loads(text)


def scenario_to_dict(config: ScenarioConfig) -> dict:
    links = []
    for l in config.links:
        d = {
            "syndrome_id": l.syndrome_id,
            "symptom_id": l.symptom_id,
            "occur_prob": l.occur_prob,
            "onset_mean_days": l.onset_mean_days,
            "onset_sd_days": l.onset_sd_days,
        }
        if l.episode_on_rate is not None:
            d["episode_on_rate"] = l.episode_on_rate
        if l.episode_off_rate is not None:
            d["episode_off_rate"] = l.episode_off_rate
        links.append(d)
    return {
        "horizon_days": config.horizon_days,
        "links": links,
        "symptoms": [{"id": s.id, "name": s.name, "kind": s.kind.value} for s in config.symptoms],
        "syndromes": [
            {"id": s.id, "name": s.name, "is_rare": s.is_rare, "prevalence": s.prevalence}
            for s in config.syndromes
        ],
    }


def _num(x):
    return None if x is None else float(x)


def scenario_from_dict(data: dict) -> ScenarioConfig:
    """Build a scenario from its JSON form, without semantic validation.

    Missing prevalences default to a uniform distribution, but only when
    every syndrome omits them.
    """
    try:
        jsonschema.validate(data, _schema())
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ScenarioFormatError(f"{path}: {exc.message}") from exc

    raw_syn = data["syndromes"]
    given = ["prevalence" in s for s in raw_syn]
    if any(given) and not all(given):
        raise ScenarioFormatError("syndromes[*].prevalence: give a prevalence for every syndrome or for none")
    uniform = 1.0 / len(raw_syn) if raw_syn else 0.0
    syndromes = tuple(
        SyndromeSpec(
            id=s["id"],
            name=s["name"],
            is_rare=s["is_rare"],
            prevalence=float(s["prevalence"]) if "prevalence" in s else uniform,
        )
        for s in raw_syn
    )
    symptoms = tuple(SymptomSpec(id=s["id"], name=s["name"], kind=SymptomKind(s["kind"])) for s in data["symptoms"])
    links = tuple(
        SymptomLink(
            syndrome_id=l["syndrome_id"],
            symptom_id=l["symptom_id"],
            occur_prob=float(l["occur_prob"]),
            onset_mean_days=float(l["onset_mean_days"]),
            onset_sd_days=float(l["onset_sd_days"]),
            episode_on_rate=_num(l.get("episode_on_rate")),
            episode_off_rate=_num(l.get("episode_off_rate")),
        )
        for l in data["links"]
    )
    return ScenarioConfig(syndromes, symptoms, links, data["horizon_days"])


def dumps_scenario(config: ScenarioConfig) -> str:
    return json.dumps(scenario_to_dict(config), sort_keys=True, indent=2) + "\n"


def save_scenario(config: ScenarioConfig, path: str | Path) -> None:
    """Write the canonical form (sorted keys, 2-space indent, UTF-8)."""
    Path(path).write_text(dumps_scenario(config), encoding="utf-8")


def load_scenario(path: str | Path) -> ScenarioConfig:
    """Read and validate a scenario file.

    Raises
    ------
    ScenarioFormatError
        The file is not JSON or does not match the scenario schema.
    ScenarioValidationError
        The file parses but breaks a model invariant; ``.violations`` lists
        every problem found.
    """
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ScenarioFormatError(f"{path}: not valid JSON ({exc})") from exc
    config = scenario_from_dict(data)
    violations = validate_scenario(config)
    if violations:
        raise ScenarioValidationError(violations)
    return config


# -- procedural generation -------------------------------------------------

_PAPER_KINDS = (
    [SymptomKind.LATENT] * 2 + [SymptomKind.PERMANENT_VISIBLE] * 4 + [SymptomKind.RECURRENT] * 4
)


def paper_scenario(seed: int) -> ScenarioConfig:
    """Generate a four-syndrome, ten-symptom world over four years.

    Syndrome 0 is the symptom-free "nothing to report" case, syndrome 1 is
    the rare disease and syndromes 2 and 3 are common. Each non-empty
    syndrome gets 3 to 5 symptom links with at least one observable symptom.
    Link probabilities lie in [0.15, 0.95], onset means in [0, 365] days.
    The result depends on ``seed`` only.
    """
    rng = stream(seed, "paper-scenario")
    kinds = [_PAPER_KINDS[i] for i in rng.permutation(len(_PAPER_KINDS))]
    symptoms = tuple(SymptomSpec(i, f"symptom {i}", k) for i, k in enumerate(kinds))

    names = ["RAS", "rare syndrome #1", "common syndrome #2", "common syndrome #3"]
    syndromes = tuple(
        SyndromeSpec(i, name, is_rare=(i == 1), prevalence=0.25) for i, name in enumerate(names)
    )

    links = []
    for syndrome_id in (1, 2, 3):
        n_links = int(rng.integers(3, 6))
        while True:
            chosen = sorted(int(s) for s in rng.choice(len(symptoms), n_links, replace=False))
            if any(kinds[s] is not SymptomKind.LATENT for s in chosen):
                break
        for s in chosen:
            p = float(rng.uniform(PAPER_LINK_CUTOFF, 0.95))
            mu = float(rng.uniform(0.0, 365.0))
            sd = float(rng.uniform(7.0, 60.0))
            on = off = None
            if kinds[s] is SymptomKind.RECURRENT:
                on = 1.0 / float(rng.uniform(3.0, 14.0))
                off = 1.0 / float(rng.uniform(20.0, 120.0))
            links.append(SymptomLink(syndrome_id, s, p, mu, sd, on, off))

    return ScenarioConfig(syndromes, symptoms, tuple(links), PAPER_HORIZON_DAYS)
