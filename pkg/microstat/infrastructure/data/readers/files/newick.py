"""
Newick tree parser.
"""

import math
from collections import Counter
from typing import Optional

from microstat.core.tree import PhyloTree
from microstat.shared.errors import ParseError

_LABEL_STOP = set("():,;[")


def _position(text: str, offset: int) -> tuple[int, int]:
    """1-based (line, column) of a character offset."""
    line = text.count("\n", 0, offset) + 1
    column = offset - (text.rfind("\n", 0, offset) + 1) + 1
    return line, column


def parse_newick(text: str, source: Optional[str] = None) -> PhyloTree:
    """
    Parse a single Newick tree.

    Branch lengths are kept exactly as written (Python float parsing);
    missing lengths default to 0. Quoted labels ('...' with '' as an
    escaped quote) and bracketed comments are supported.

    Args:
        text: Newick string ending in ';'
        source: Optional file name used in error messages

    Returns:
        PhyloTree: The parsed tree

    Raises:
        ParseError: On unbalanced parentheses, malformed lengths, misplaced
            labels, duplicate leaf labels or text after the final ';'
    """
    if not isinstance(text, str):
        raise TypeError(f"Expected str, got {type(text).__name__}")

    def fail(message: str, offset: int) -> ParseError:
        line, column = _position(text, offset)
        return ParseError(message, line=line, column=column, source=source)

    parents: list[int] = [-1]
    lengths: list[float] = [0.0]
    labels: list[Optional[str]] = [None]
    has_length = [False]
    closed = [False]
    open_offsets: list[int] = []

    def new_node(parent: int) -> int:
        parents.append(parent)
        lengths.append(0.0)
        labels.append(None)
        has_length.append(False)
        closed.append(False)
        return len(parents) - 1

    current = 0
    i = 0
    n = len(text)
    terminated = False

    while i < n:
        char = text[i]

        if char.isspace():
            i += 1

        elif char == "[":
            end = text.find("]", i)
            if end == -1:
                raise fail("unterminated comment", i)
            i = end + 1

        elif char == "(":
            if closed[current] or labels[current] is not None or has_length[current]:
                raise fail("unexpected '('", i)
            open_offsets.append(i)
            current = new_node(current)
            i += 1

        elif char == ",":
            if not open_offsets:
                raise fail("',' outside of parentheses", i)
            current = new_node(parents[current])
            i += 1

        elif char == ")":
            if not open_offsets:
                raise fail("unbalanced parentheses: unexpected ')'", i)
            open_offsets.pop()
            current = parents[current]
            closed[current] = True
            i += 1

        elif char == ":":
            if has_length[current]:
                raise fail("node has more than one branch length", i)
            start = i + 1
            i = start
            while i < n and text[i] not in _LABEL_STOP and not text[i].isspace():
                i += 1
            token = text[start:i]
            try:
                value = float(token)
            except ValueError:
                raise fail(f"invalid branch length '{token}'", start) from None
            if not math.isfinite(value) or value < 0:
                raise fail(f"branch length must be finite and >= 0, got '{token}'", start)
            lengths[current] = value
            has_length[current] = True

        elif char == ";":
            if open_offsets:
                raise fail("unbalanced parentheses: missing ')'", open_offsets[-1])
            rest = text[i + 1 :]
            if rest.strip():
                raise fail("unexpected text after ';'", i + 1 + (len(rest) - len(rest.lstrip())))
            terminated = True
            break

        else:
            if labels[current] is not None or has_length[current]:
                raise fail("unexpected label", i)
            if char == "'":
                chunks = []
                i += 1
                while True:
                    end = text.find("'", i)
                    if end == -1:
                        raise fail("unterminated quoted label", i - 1)
                    chunks.append(text[i:end])
                    if end + 1 < n and text[end + 1] == "'":
                        chunks.append("'")
                        i = end + 2
                        continue
                    i = end + 1
                    break
                labels[current] = "".join(chunks)
            else:
                start = i
                while i < n and text[i] not in _LABEL_STOP and not text[i].isspace():
                    i += 1
                labels[current] = text[start:i]

    if not terminated:
        if open_offsets:
            raise fail("unbalanced parentheses: missing ')'", open_offsets[-1])
        raise fail("tree must end with ';'", n)

    tree = PhyloTree(parents, lengths, labels)

    leaf_labels = [tree.labels[i] for i in tree.leaves()]
    duplicates = [lab for lab, k in Counter(leaf_labels).items() if lab is not None and k > 1]
    if duplicates:
        raise ParseError(
            f"duplicate leaf label(s): {', '.join(sorted(duplicates))}", source=source
        )
    return tree
