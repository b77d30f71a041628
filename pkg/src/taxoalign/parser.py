"""Line-oriented text format for alignments, with span-carrying errors.

Grammar::

    taxonomy <id> <label>          # opens a taxonomy section (id is 1 or 2)
    (<parent> <child>*)            # tree line; concepts are declared by
                                   # first appearance; a bare (A) declares a
                                   # childless root
    articulations                  # opens the articulation section
    [<key> <relation> <key>]       # e.g. [1.B equals 2.E]; a braced set
                                   # {equals is_included_in} is a disjunction
    # comment                      # '#' starts a comment anywhere

Keys are "<taxonomy id>.<name>".  Articulations written taxonomy 2 ->
taxonomy 1 are normalized to the stored 1 -> 2 direction via the converse
mask.  The root of each taxonomy is the unique concept that never appears as
a child.  Serialization is canonical (sorted children, long relation names)
and reparses to a structurally equal alignment.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

from . import model
from .model import Alignment, Articulation, ConstraintFlags, SourceSpan, Taxonomy
from .relations import RelationMask, relation_from_token

_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")
_KEY_RE = re.compile(r"([0-9]+)\.([A-Za-z_][A-Za-z0-9_]*)\Z")


@dataclass(frozen=True)
class ParseIssue:
    """One rejected construct, with the span that produced it."""

    code: str
    message: str
    span: SourceSpan

    def __str__(self) -> str:
        return f"{self.span.describe()}: {self.code}: {self.message}"


class AlignmentSyntaxError(ValueError):
    """Raised when the input text cannot be parsed into a valid alignment."""

    def __init__(self, issues: List[ParseIssue]):
        self.issues = list(issues)
        super().__init__("; ".join(str(i) for i in self.issues) or "parse failed")


def _span(line_no: int, line: str, start: int, end: int) -> SourceSpan:
    return SourceSpan(line=line_no, column_start=start + 1, column_end=end, text=line[start:end])


class _Parser:
    def __init__(self, text: str, coverage: bool):
        self.text = text
        self.coverage = coverage
        self.issues: List[ParseIssue] = []
        # per taxonomy id: declaration order of concepts and child -> parent
        self.concepts: Dict[int, List[str]] = {}
        self.parents: Dict[int, Dict[str, str]] = {}
        self.labels: Dict[int, str] = {}
        self.articulations: List[Articulation] = []
        self.current_taxonomy: Optional[int] = None
        self.in_articulations = False

    def error(self, code: str, message: str, span: SourceSpan) -> None:
        self.issues.append(ParseIssue(code, message, span))

    def declare(self, tid: int, name: str) -> None:
        if name not in self.concepts[tid]:
            self.concepts[tid].append(name)

    def parse(self) -> Alignment:
        for line_no, raw in enumerate(self.text.splitlines(), start=1):
            line = raw.split("#", 1)[0]
            if not line.strip():
                continue
            self.parse_line(line_no, line)
        alignment = self.build()
        if self.issues:
            raise AlignmentSyntaxError(self.issues)
        return alignment

    def parse_line(self, line_no: int, line: str) -> None:
        stripped = line.strip()
        start = line.index(stripped[0])
        span = _span(line_no, line, start, start + len(stripped))
        if stripped.startswith("("):
            self.parse_tree_line(line_no, line, stripped, span)
        elif stripped.startswith("["):
            self.parse_articulation_line(line_no, line, stripped, span)
        else:
            words = stripped.split()
            if words[0] == "taxonomy":
                self.parse_taxonomy_header(words, span)
            elif words[0] == "articulations":
                if len(words) > 1:
                    self.error("lexical-error", "unexpected text after 'articulations'", span)
                self.in_articulations = True
                self.current_taxonomy = None
            else:
                self.error("lexical-error", f"unrecognized line {stripped!r}", span)

    def parse_taxonomy_header(self, words: List[str], span: SourceSpan) -> None:
        if self.in_articulations:
            self.error("lexical-error", "taxonomy section after articulations", span)
            return
        if len(words) != 3:
            self.error("lexical-error", "expected: taxonomy <id> <label>", span)
            return
        try:
            tid = int(words[1])
        except ValueError:
            self.error("unknown-taxonomy", f"taxonomy id must be an integer, got {words[1]!r}", span)
            return
        if tid not in (1, 2):
            self.error("unknown-taxonomy", f"taxonomy id must be 1 or 2, got {tid}", span)
            return
        if tid in self.labels:
            self.error("lexical-error", f"taxonomy {tid} declared twice", span)
            return
        self.labels[tid] = words[2]
        self.concepts[tid] = []
        self.parents[tid] = {}
        self.current_taxonomy = tid

    def parse_tree_line(self, line_no: int, line: str, stripped: str, span: SourceSpan) -> None:
        if self.in_articulations:
            self.error("lexical-error", "tree line after articulations header", span)
            return
        if self.current_taxonomy is None:
            self.error("lexical-error", "tree line outside a taxonomy section", span)
            return
        if not stripped.endswith(")"):
            self.error("lexical-error", "tree line must end with ')'", span)
            return
        names = stripped[1:-1].split()
        if not names:
            self.error("lexical-error", "empty tree line", span)
            return
        for n in names:
            if not _NAME_RE.match(n):
                self.error("lexical-error", f"invalid concept name {n!r}", span)
                return
        tid = self.current_taxonomy
        parent, children = names[0], names[1:]
        self.declare(tid, parent)
        for child in children:
            if child in self.parents[tid]:
                self.error("duplicate-child", f"concept {child!r} already has parent {self.parents[tid][child]!r}", span)
                continue
            if child == parent:
                self.error("cycle", f"concept {child!r} cannot be its own parent", span)
                continue
            self.declare(tid, child)
            self.parents[tid][child] = parent

    def parse_relation_tokens(self, body: str, span: SourceSpan) -> Optional[RelationMask]:
        body = body.strip()
        if body.startswith("{"):
            if not body.endswith("}"):
                self.error("lexical-error", "unterminated relation braces", span)
                return None
            tokens = [t for t in re.split(r"[\s,]+", body[1:-1]) if t]
            if not tokens:
                self.error("empty-relation-braces", "relation braces must list at least one relation", span)
                return None
        else:
            tokens = [body]
        bits = 0
        for t in tokens:
            try:
                bits |= relation_from_token(t)
            except ValueError:
                self.error("lexical-error", f"unknown relation token {t!r}", span)
                return None
        return RelationMask(bits)

    def parse_articulation_line(self, line_no: int, line: str, stripped: str, span: SourceSpan) -> None:
        if not self.in_articulations:
            self.error("lexical-error", "articulation line before 'articulations' header", span)
            return
        if not stripped.endswith("]"):
            self.error("lexical-error", "articulation line must end with ']'", span)
            return
        body = stripped[1:-1].strip()
        m = re.match(r"(\S+)\s+(.+?)\s+(\S+)\Z", body)
        if not m or m.group(2).strip().startswith("{") != m.group(2).strip().endswith("}"):
            self.error("lexical-error", "expected: [<key> <relation> <key>]", span)
            return
        left_text, rel_text, right_text = m.group(1), m.group(2), m.group(3)
        mask = self.parse_relation_tokens(rel_text, span)
        if mask is None:
            return
        sides = []
        for text in (left_text, right_text):
            km = _KEY_RE.match(text)
            if not km:
                self.error("lexical-error", f"invalid concept key {text!r}", span)
                return
            tid, name = int(km.group(1)), km.group(2)
            if tid not in self.concepts:
                self.error("unknown-taxonomy", f"key {text!r} references undeclared taxonomy {tid}", span)
                return
            if name not in self.concepts[tid]:
                self.error("unknown-concept", f"unknown concept {text!r}", span)
                return
            sides.append((tid, name))
        (ltid, lname), (rtid, rname) = sides
        if ltid == rtid:
            self.error("unknown-concept", "articulation must relate taxonomy 1 to taxonomy 2", span)
            return
        if ltid == 2:  # normalize to the stored 1 -> 2 direction
            (ltid, lname), (rtid, rname) = (rtid, rname), (ltid, lname)
            mask = mask.converse()
        self.articulations.append(
            Articulation(
                index=len(self.articulations),
                left=model.concept_key(1, lname),
                right=model.concept_key(2, rname),
                mask=mask,
                source=stripped,
                span=span,
            )
        )

    def build(self) -> Alignment:
        taxonomies = {}
        for tid in (1, 2):
            if tid not in self.labels:
                whole = _span(1, self.text.splitlines()[0] if self.text.splitlines() else "", 0, 0)
                self.error("unknown-taxonomy", f"taxonomy {tid} was never declared", whole)
                taxonomies[tid] = Taxonomy(id=tid, label="", concepts=(), parent={})
                continue
            taxonomies[tid] = Taxonomy(
                id=tid,
                label=self.labels[tid],
                concepts=tuple(self.concepts[tid]),
                parent=self.parents[tid],
            )
        alignment = Alignment(
            taxonomy1=taxonomies[1],
            taxonomy2=taxonomies[2],
            articulations=tuple(self.articulations),
            flags=ConstraintFlags(coverage=self.coverage),
        )
        if not self.issues:
            # structural validation; report violations at whole-file scope
            for v in model.validate(alignment):
                whole = _span(1, self.text.splitlines()[0] if self.text.splitlines() else "", 0, 0)
                self.error(v.code, v.message, whole)
        return alignment


def parse_alignment(text: str, coverage: bool = True) -> Alignment:
    """Parse alignment text; raises :class:`AlignmentSyntaxError` listing every issue."""
    return _Parser(text, coverage).parse()


def try_parse_alignment(text: str, coverage: bool = True) -> Tuple[Optional[Alignment], List[ParseIssue]]:
    """Parse, returning (alignment, []) on success or (None, issues) on failure."""
    try:
        return parse_alignment(text, coverage=coverage), []
    except AlignmentSyntaxError as e:
        return None, e.issues


def _serialize_taxonomy(t: Taxonomy, lines: List[str]) -> None:
    lines.append(f"taxonomy {t.id} {t.label}")
    order = [t.root]
    emitted = []
    while order:
        n = order.pop(0)
        kids = t.children(n)
        if kids:
            emitted.append("(" + " ".join([n] + kids) + ")")
            order = kids + order
    if not emitted:
        emitted.append(f"({t.root})")
    lines.extend(emitted)


def serialize_alignment(alignment: Alignment) -> str:
    """Canonical text: preorder tree lines with sorted children, long relation
    names, articulations in index order.  Bit-reproducible for equal inputs."""
    lines: List[str] = []
    _serialize_taxonomy(alignment.taxonomy1, lines)
    _serialize_taxonomy(alignment.taxonomy2, lines)
    lines.append("articulations")
    for a in alignment.articulations:
        lines.append(f"[{a.left} {a.mask.text(long=True)} {a.right}]")
    return "\n".join(lines) + "\n"
