"""Lowercasing word tokenizer and rule-based sentence splitter.

Tokens are whitespace chunks with leading/trailing punctuation detached into
single-character tokens. Intra-word periods stay (``u.k.``, ``3.5``), and a
trailing period is kept on dotted acronyms. Sentences end at ``.``, ``?`` or
``!`` (optionally followed by closing quotes/brackets) when the next
non-space text starts with an uppercase letter.
"""
from __future__ import annotations

import re
import string
from typing import List

PUNCT = set(string.punctuation) | {"“", "”", "‘", "’", "—", "–", "…", "«", "»"}

ACRONYM = re.compile(r"^(?:[^\W_]\.){2,}$")

SENTENCE_BOUNDARY = re.compile(r"[.?!][\"'”’)\]]*(\s+)(?=[\"'“‘(\[]*[A-Z])")


def _split_chunk(chunk: str) -> List[str]:
    i = 0
    while i < len(chunk) and chunk[i] in PUNCT:
        i += 1
    lead, rest = chunk[:i], chunk[i:]

    j = len(rest)
    while j > 0 and rest[j - 1] in PUNCT:
        j -= 1
    core, tail = rest[:j], rest[j:]

    if core and tail.startswith(".") and ACRONYM.match(core + "."):
        core, tail = core + ".", tail[1:]

    return list(lead) + ([core] if core else []) + list(tail)


def tokenize(text: str) -> List[str]:
    """Lowercased word tokens of ``text``; empty text gives an empty list."""
    tokens: List[str] = []
    for chunk in text.lower().split():
        tokens.extend(_split_chunk(chunk))
    return tokens


def split_sentences(text: str) -> List[str]:
    """Raw sentence strings. Line breaks always end a sentence."""
    sentences: List[str] = []
    for paragraph in text.splitlines():
        start = 0
        for match in SENTENCE_BOUNDARY.finditer(paragraph):
            sentences.append(paragraph[start:match.start(1)])
            start = match.end(1)
        sentences.append(paragraph[start:])
    return [s.strip() for s in sentences if s.strip()]


def sentence_tokenize(text: str) -> List[List[str]]:
    """Split into sentences, then tokenize each; empty sentences are dropped."""
    out = []
    for sentence in split_sentences(text):
        tokens = tokenize(sentence)
        if tokens:
            out.append(tokens)
    return out


def detokenize(tokens: List[str]) -> str:
    return " ".join(tokens)
