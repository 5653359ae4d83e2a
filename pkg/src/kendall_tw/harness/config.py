"""INI-style run configuration layered over the packaged defaults."""

from __future__ import annotations

import configparser
import re
from importlib import resources

DEFAULTS_NAME = "defaults.ini"


class ConfigError(ValueError):
    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        self.path = path
        self.line = line
        where = f"{path or '<config>'}" + (f":{line}" if line else "")
        super().__init__(f"{where}: {message}")


def defaults_text() -> str:
    return resources.files("kendall_tw.harness").joinpath(DEFAULTS_NAME).read_text()


class RunConfig:
    """Typed access to a parsed configuration; remembers where each key was set."""

    def __init__(self):
        self._cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
        self._where: dict[tuple[str, str], tuple[str, int]] = {}

    # -- loading ---------------------------------------------------------
    @classmethod
    def load(cls, path: str | None = None, overrides: dict | None = None) -> "RunConfig":
        cfg = cls()
        cfg._read(defaults_text(), DEFAULTS_NAME)
        if path is not None:
            try:
                with open(path) as fh:
                    text = fh.read()
            except OSError as exc:
                raise ConfigError(f"cannot read config: {exc}", path) from None
            cfg._read(text, path)
        for (sec, key), val in (overrides or {}).items():
            if not cfg._cp.has_section(sec):
                cfg._cp.add_section(sec)
            cfg._cp.set(sec, key, str(val))
        return cfg

    def _read(self, text: str, source: str) -> None:
        try:
            self._cp.read_string(text, source=source)
        except configparser.MissingSectionHeaderError as exc:
            raise ConfigError("key outside of any [section]", source, exc.lineno) from None
        except configparser.ParsingError as exc:
            line = exc.errors[0][0] if exc.errors else None
            raise ConfigError("malformed line (expected 'key = value')", source, line) from None
        except (configparser.DuplicateSectionError, configparser.DuplicateOptionError) as exc:
            raise ConfigError(exc.message.split(": ", 1)[-1], source, exc.lineno) from None
        section = None
        for lineno, raw in enumerate(text.splitlines(), start=1):
            m = re.match(r"\s*\[([^\]]+)\]", raw)
            if m:
                section = m.group(1).strip()
                continue
            m = re.match(r"\s*([^#;=:\s][^=:]*?)\s*[=:]", raw)
            if m and section:
                self._where[(section, m.group(1).strip().lower())] = (source, lineno)

    # -- typed getters ---------------------------------------------------
    def _raw(self, section: str, key: str) -> str:
        try:
            return self._cp.get(section, key)
        except (configparser.NoSectionError, configparser.NoOptionError):
            raise ConfigError(f"missing setting [{section}] {key}") from None

    def _convert(self, section, key, fn, kind):
        raw = self._raw(section, key)
        try:
            return fn(raw)
        except ValueError:
            src, line = self._where.get((section, key), (None, None))
            raise ConfigError(f"[{section}] {key} = {raw!r} is not a valid {kind}", src, line) from None

    def get(self, section: str, key: str) -> str:
        return self._raw(section, key)

    def get_int(self, section: str, key: str) -> int:
        return self._convert(section, key, int, "integer")

    def get_float(self, section: str, key: str) -> float:
        return self._convert(section, key, float, "number")

    def get_bool(self, section: str, key: str) -> bool:
        def fn(v):
            low = v.strip().lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(v)

        return self._convert(section, key, fn, "boolean")

    def get_list(self, section: str, key: str, item=str) -> list:
        return self._convert(
            section, key, lambda v: [item(x.strip()) for x in v.split(",") if x.strip()], f"list of {item.__name__}"
        )

    def get_pairs(self, section: str, key: str) -> list[tuple[int, int]]:
        def fn(v):
            out = []
            for chunk in v.split(","):
                a, b = chunk.lower().split("x")
                out.append((int(a), int(b)))
            return out

        return self._convert(section, key, fn, "list of PxN pairs")

    def line_of(self, section: str, key: str):
        return self._where.get((section, key))

    def sections(self) -> list[str]:
        return self._cp.sections()

    def as_dict(self) -> dict:
        return {s: dict(self._cp.items(s)) for s in self._cp.sections()}
