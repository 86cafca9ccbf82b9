from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

C_SOURCE_SUFFIXES = (".c", ".cc", ".cpp", ".cxx")
C_HEADER_SUFFIXES = (".h", ".hh", ".hpp", ".hxx")
C_LIKE_SUFFIXES = C_SOURCE_SUFFIXES + C_HEADER_SUFFIXES

_TOP_COMMENT = re.compile(r"//\s*Top function name:\s*([A-Za-z_]\w*)")


@dataclass(frozen=True)
class SourceFile:
    file_name: str
    file_content: str


@dataclass(frozen=True)
class SourceUnit:
    """The files making up one kernel, plus an optional top-function hint."""

    files: tuple[SourceFile, ...]
    top_hint: str | None = None

    def __post_init__(self):
        if not self.files:
            raise ValueError("a source unit needs at least one file")
        names = [f.file_name for f in self.files]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate file names in unit: {names}")

    @classmethod
    def from_text(cls, text: str, name: str = "kernel.c", top_hint: str | None = None) -> "SourceUnit":
        return cls((SourceFile(name, text),), top_hint)

    @classmethod
    def from_files(cls, paths, top_hint: str | None = None) -> "SourceUnit":
        files = []
        for p in paths:
            p = Path(p)
            files.append(SourceFile(p.name, p.read_text(encoding="utf-8")))
        unit = cls(tuple(files), top_hint)
        return unit if top_hint else unit.with_hint(unit.declared_top())

    @classmethod
    def from_dir(cls, path, top_hint: str | None = None) -> "SourceUnit":
        path = Path(path)
        paths = sorted(p for p in path.iterdir()
                       if p.is_file() and p.suffix.lower() in C_LIKE_SUFFIXES)
        if not paths:
            raise ValueError(f"no C-like source files in {path}")
        return cls.from_files(paths, top_hint)

    def with_hint(self, top_hint: str | None) -> "SourceUnit":
        return SourceUnit(self.files, top_hint)

    def replace_contents(self, contents: dict[str, str]) -> "SourceUnit":
        files = tuple(SourceFile(f.file_name, contents.get(f.file_name, f.file_content))
                      for f in self.files)
        return SourceUnit(files, self.top_hint)

    def declared_top(self) -> str | None:
        """Top function announced by a ``// Top function name: f`` comment, if any."""
        for f in self.files:
            m = _TOP_COMMENT.search(f.file_content)
            if m:
                return m.group(1)
        return None

    def get(self, name: str) -> SourceFile | None:
        for f in self.files:
            if f.file_name == name:
                return f
        base = name.rsplit("/", 1)[-1]
        for f in self.files:
            if f.file_name.rsplit("/", 1)[-1] == base:
                return f
        return None

    @property
    def text(self) -> str:
        return "\n".join(f.file_content for f in self.files)

    def pragma_lines(self) -> int:
        return sum(count_hls_pragmas(f.file_content) for f in self.files)

    def code_length(self) -> int:
        return sum(len(f.file_content) for f in self.files)

    def write(self, directory) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        for f in self.files:
            target = directory / f.file_name
            target.parent.mkdir(parents=True, exist_ok=True)
            target.write_text(f.file_content, encoding="utf-8")


def count_hls_pragmas(text: str) -> int:
    return sum(1 for line in text.splitlines() if line.strip().startswith("#pragma HLS"))
