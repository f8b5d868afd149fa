"""Structured text reports.

One document per command: a schema line, a [config] echo, one or more
[results.*] sections, and a [timing] section.  Keys are dotted paths,
values render deterministically (floats at 12 significant digits), so
equal configurations produce byte-identical result sections; only
[timing] varies between runs.
"""

from __future__ import annotations

from fractions import Fraction

SCHEMA = "ratshare.report.v1"
ARTIFACT_VERSION = "0.1.0"


def fmt_value(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".12g")
    if isinstance(value, Fraction):
        return str(value)
    return str(value)


class Section:
    def __init__(self, name: str):
        self.name = name
        self.entries: list[tuple[str, str]] = []

    def add(self, key: str, value) -> "Section":
        self.entries.append((key, fmt_value(value)))
        return self

    def render(self) -> str:
        lines = [f"[{self.name}]"]
        lines.extend(f"{key} = {value}" for key, value in self.entries)
        return "\n".join(lines)


class Report:
    def __init__(self, command: str):
        self.command = command
        self.sections: list[Section] = []

    def section(self, name: str) -> Section:
        section = Section(name)
        self.sections.append(section)
        return section

    def render(self) -> str:
        head = [f"schema = {SCHEMA}", f"artifact = ratshare {ARTIFACT_VERSION}"]
        body = [section.render() for section in self.sections]
        return "\n".join(head) + "\n\n" + "\n\n".join(body) + "\n"

    def result_text(self) -> str:
        """Everything except [timing]; byte-identical for equal configs."""
        head = [f"schema = {SCHEMA}", f"artifact = ratshare {ARTIFACT_VERSION}"]
        body = [s.render() for s in self.sections if s.name != "timing"]
        return "\n".join(head) + "\n\n" + "\n\n".join(body) + "\n"
