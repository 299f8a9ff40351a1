"""Run configuration: a flat, sectioned key-value text format.

Grammar::

    file    := (blank | comment | section | entry)*
    section := '[' name ']'
    entry   := key '=' value
    value   := int | float | string | list | table
    list    := '[' (scalar (',' scalar)*)? ']'
    table   := '{' key '=' list '}'
    string  := '"' chars '"' | bare-token

Sections: ``[group]`` (``kind``, ``generators``), ``[chain]`` (one ``gens`` list
per level, written either bare or as ``subgroup = { gens = [...] }``, or a
single ``template`` list), optional ``[factor]`` (same keys, the
target chain of the factor check), and ``[run]``.  In a template, ``{p^n}`` is
replaced by ``p`` to the level number and ``{n}`` by the level number.

Errors carry positions: :class:`ConfigSyntaxError` has a line and a column,
:class:`SemanticError` names the offending field.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import asdict, dataclass, replace
from pathlib import Path

from .errors import ConfigSyntaxError, OdoforgeError, SemanticError
from .words import GroupDescriptor, parse_word

VERBS = ("validate", "toeplitz", "periods", "factor", "eigen", "measure", "all")
SECTIONS = ("group", "chain", "factor", "run")

_SECTION_RE = re.compile(r"\[\s*([A-Za-z_]+)\s*\]\s*$")
_KEY_RE = re.compile(r"([A-Za-z_][A-Za-z0-9_]*)\s*=\s*")
_INT_RE = re.compile(r"[+-]?\d+\Z")
_FLOAT_RE = re.compile(r"[+-]?(\d+\.\d*|\.\d+|\d+)([eE][+-]?\d+)?\Z")


@dataclass(frozen=True)
class ChainSpec:
    levels: tuple[tuple[str, ...], ...] = ()
    template: tuple[str, ...] | None = None

    def materialize(self, depth: int) -> list[list[str]]:
        if self.template is not None:
            return [[_expand(t, n) for t in self.template] for n in range(1, depth + 1)]
        return [list(level) for level in self.levels[:depth]]

    @property
    def available(self) -> int | None:
        return None if self.template is not None else len(self.levels)


def _expand(template: str, n: int) -> str:
    out = re.sub(r"\{(\d+)\^n\}", lambda m: str(int(m.group(1)) ** n), template)
    return out.replace("{n}", str(n))


@dataclass(frozen=True)
class RunConfig:
    group: GroupDescriptor
    chain: ChainSpec
    factor: ChainSpec | None = None
    depth: int = 4
    ball_radius: int = 4
    window_radius: int = 4
    test_radius: int = 3
    sample_radius: int = 4
    measure_levels: int | None = None
    tolerance: float = 1e-9
    pattern_file: str | None = None
    command: str = "all"
    out_dir: str = "out"

    def __post_init__(self):
        if self.depth < 1:
            raise SemanticError("depth", "must be at least 1")
        for name in ("ball_radius", "window_radius", "test_radius", "sample_radius"):
            if getattr(self, name) < 1:
                raise SemanticError(name, "radii must be positive")
        if self.command not in VERBS:
            raise SemanticError("command", f"expected one of {', '.join(VERBS)}")
        if not self.tolerance > 0:
            raise SemanticError("tolerance", "must be positive")
        for spec, name in ((self.chain, "chain"), (self.factor, "factor")):
            if spec is not None and spec.available is not None and spec.available < (
                    self.depth if name == "chain" else 1):
                raise SemanticError(name, f"lists {spec.available} levels, depth {self.depth} needed")
        if self.measure_levels is not None and not 0 <= self.measure_levels <= self.depth:
            raise SemanticError("measure_levels", "must lie in [0, depth]")

    @property
    def levels_for_measure(self) -> int:
        if self.measure_levels is not None:
            return self.measure_levels
        return max(1, self.depth - 3)

    def chain_levels(self) -> list[list[str]]:
        return self.chain.materialize(self.depth)

    def factor_levels(self) -> list[list[str]] | None:
        if self.factor is None:
            return None
        n = self.factor.available or self.depth
        return self.factor.materialize(n)

    def with_overrides(self, **kw) -> "RunConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        return replace(self, **kw)

    def canonical(self) -> dict:
        """Resolved configuration as plain data (the basis of the config hash)."""
        d = asdict(self)
        d["group"] = {"kind": self.group.kind, "generators": list(self.group.names)}
        d["chain"] = self.chain_levels()
        d["factor"] = self.factor_levels()
        d.pop("out_dir")
        return d

    def hash(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


# -- lexing ---------------------------------------------------------------------

def _scalar(text: str, line: int, col: int):
    text = text.strip()
    if not text:
        raise ConfigSyntaxError(line, col, "missing value")
    if text.startswith('"'):
        if len(text) < 2 or not text.endswith('"') or '"' in text[1:-1]:
            raise ConfigSyntaxError(line, col, "unterminated string")
        return text[1:-1]
    if _INT_RE.match(text):
        return int(text)
    if _FLOAT_RE.match(text):
        return float(text)
    if any(ch in text for ch in '[]{}",='):
        raise ConfigSyntaxError(line, col, f"unexpected token {text!r}")
    return text


def _split_list(body: str, line: int, col: int) -> list:
    items = []
    start = 0
    in_str = False
    for i, ch in enumerate(body):
        if ch == '"':
            in_str = not in_str
        elif ch == "," and not in_str:
            items.append((body[start:i], col + start))
            start = i + 1
    if in_str:
        raise ConfigSyntaxError(line, col + len(body), "unterminated string")
    tail = body[start:]
    if tail.strip() or items:
        items.append((tail, col + start))
    out = []
    for text, c in items:
        lead = len(text) - len(text.lstrip())
        out.append(_scalar(text, line, c + lead))
    return out


def _value(text: str, line: int, col: int):
    stripped = text.strip()
    if stripped.startswith("{"):
        if not stripped.endswith("}"):
            raise ConfigSyntaxError(line, col + len(text.rstrip()), "expected '}'")
        offset = col + text.index("{") + 1
        inner = stripped[1:-1]
        lead = len(inner) - len(inner.lstrip())
        m = _KEY_RE.match(inner.lstrip())
        if not m:
            raise ConfigSyntaxError(line, offset + lead, "expected 'key = value' inside braces")
        return {m.group(1): _value(inner.lstrip()[m.end():], line, offset + lead + m.end())}
    if stripped.startswith("["):
        if not stripped.endswith("]"):
            raise ConfigSyntaxError(line, col + len(text.rstrip()), "expected ']'")
        inner = stripped[1:-1]
        return _split_list(inner, line, col + text.index("[") + 1)
    return _scalar(text, line, col)


def _strip_comment(raw: str) -> str:
    in_str = False
    for i, ch in enumerate(raw):
        if ch == '"':
            in_str = not in_str
        elif ch == "#" and not in_str:
            return raw[:i]
    return raw


def parse_sections(text: str) -> dict[str, list[tuple[str, object, int]]]:
    """Section name -> ordered (key, value, line) entries."""
    sections: dict[str, list[tuple[str, object, int]]] = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = _strip_comment(raw).rstrip()
        if not line.strip():
            continue
        indent = len(line) - len(line.lstrip())
        body = line.strip()
        if body.startswith("["):
            m = _SECTION_RE.match(body)
            if not m:
                raise ConfigSyntaxError(lineno, indent + 1, "malformed section header")
            current = m.group(1)
            if current not in SECTIONS:
                raise ConfigSyntaxError(lineno, indent + 2, f"unknown section [{current}]")
            if current in sections:
                raise ConfigSyntaxError(lineno, indent + 1, f"duplicate section [{current}]")
            sections[current] = []
            continue
        m = _KEY_RE.match(body)
        if not m:
            raise ConfigSyntaxError(lineno, indent + 1, "expected 'key = value'")
        if current is None:
            raise ConfigSyntaxError(lineno, indent + 1, "entry outside of a section")
        col = indent + m.end() + 1
        sections[current].append((m.group(1), _value(body[m.end():], lineno, col), lineno))
    return sections


# -- semantics ------------------------------------------------------------------

_RUN_INT = ("depth", "ball_radius", "window_radius", "test_radius", "sample_radius", "measure_levels")
_RUN_KEYS = set(_RUN_INT) | {"tolerance", "pattern_file", "command"}


def _single(entries, section: str) -> dict:
    out = {}
    for key, value, _ in entries:
        if key in out:
            raise SemanticError(f"{section}.{key}", "given twice")
        out[key] = value
    return out


def _as_list(value, field_name: str) -> list[str]:
    if isinstance(value, str):
        value = [v.strip() for v in value.split(",")] if "," in value else [value]
    if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
        raise SemanticError(field_name, "expected a list of strings")
    return value


def _chain_spec(entries, section: str, group: GroupDescriptor) -> ChainSpec:
    levels = []
    template = None
    for key, value, _ in entries:
        if key == "subgroup":
            if not isinstance(value, dict) or set(value) != {"gens"}:
                raise SemanticError(f"{section}.subgroup", "expected { gens = [...] }")
            key, value = "gens", value["gens"]
        if key == "gens":
            levels.append(tuple(_as_list(value, f"{section}.gens")))
        elif key == "template":
            if template is not None:
                raise SemanticError(f"{section}.template", "given twice")
            template = tuple(_as_list(value, f"{section}.template"))
        else:
            raise SemanticError(f"{section}.{key}", "unknown key")
    if template is not None and levels:
        raise SemanticError(section, "use either gens lines or a template, not both")
    if template is None and not levels:
        raise SemanticError(section, "no levels given")
    spec = ChainSpec(tuple(levels), template)
    # every word must parse now, so errors point at the config
    for n, level in enumerate(spec.materialize(spec.available or 2), 1):
        for w in level:
            try:
                parse_word(w, group)
            except OdoforgeError as exc:
                raise SemanticError(f"{section}.level{n}", f"{w!r}: {exc}") from None
    return spec


def parse_config(text: str, **overrides) -> RunConfig:
    sections = parse_sections(text)
    for name in ("group", "chain"):
        if name not in sections:
            raise SemanticError(name, f"missing [{name}] section")
    g = _single(sections["group"], "group")
    for key in g:
        if key not in ("kind", "generators"):
            raise SemanticError(f"group.{key}", "unknown key")
    kind = g.get("kind")
    if kind not in ("free", "free-abelian"):
        raise SemanticError("group.kind", "expected 'free' or 'free-abelian'")
    if "generators" not in g:
        raise SemanticError("group.generators", "missing")
    names = _as_list(g["generators"], "group.generators")
    try:
        group = GroupDescriptor(kind, tuple(names))
    except ValueError as exc:
        raise SemanticError("group.generators", str(exc)) from None
    chain = _chain_spec(sections["chain"], "chain", group)
    factor = _chain_spec(sections["factor"], "factor", group) if "factor" in sections else None
    run = _single(sections.get("run", []), "run")
    kwargs = {}
    for key, value in run.items():
        if key not in _RUN_KEYS:
            raise SemanticError(f"run.{key}", "unknown key")
        if key in _RUN_INT:
            if not isinstance(value, int):
                raise SemanticError(f"run.{key}", "expected an integer")
        elif key == "tolerance":
            if not isinstance(value, (int, float)):
                raise SemanticError("run.tolerance", "expected a number")
            value = float(value)
        elif not isinstance(value, str):
            raise SemanticError(f"run.{key}", "expected a string")
        kwargs[key] = value
    kwargs.update({k: v for k, v in overrides.items() if v is not None})
    if "depth" not in kwargs and chain.available is not None:
        kwargs["depth"] = chain.available
    return RunConfig(group=group, chain=chain, factor=factor, **kwargs)


def load_config(path: str | Path, **overrides) -> RunConfig:
    path = Path(path)
    cfg = parse_config(path.read_text(), **overrides)
    if cfg.pattern_file is not None and not Path(cfg.pattern_file).is_absolute():
        cfg = replace(cfg, pattern_file=str(path.parent / cfg.pattern_file))
    return cfg


FIXTURES = ("dyadic", "triadic", "z2_box", "f2_normal", "f2_s3")


def fixture_path(name: str) -> Path:
    path = Path(__file__).parent / "fixtures" / f"{name}.cfg"
    if not path.exists():
        raise FileNotFoundError(f"no fixture named {name!r}")
    return path
