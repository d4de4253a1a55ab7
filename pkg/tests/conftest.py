"""Shared helpers: compact builders for documents with plausible geometry."""

import pytest

from linescan.model import Document, Word

PAGE_W, PAGE_H = 595.0, 842.0


def make_word(
    text,
    page=0,
    line=0,
    pos=0,
    x=50.0,
    y=60.0,
    char_w=6.0,
    word_h=10.0,
):
    """One word at absolute coordinates, normalized into page space."""
    width = max(1.0, char_w * len(text))
    return Word(
        text=text,
        page=page,
        line=line,
        pos_in_line=pos,
        left=x / PAGE_W,
        top=y / PAGE_H,
        right=min(1.0, (x + width) / PAGE_W),
        bottom=(y + word_h) / PAGE_H,
        page_width=PAGE_W,
        page_height=PAGE_H,
    )


def make_doc(lines, doc_id="d0", sender_id="s0"):
    """Document from a list of lines, each a list of word texts; geometry is
    a uniform grid good enough for feature code to accept."""
    words = []
    y = 60.0
    for li, texts in enumerate(lines):
        x = 50.0
        for pos, text in enumerate(texts):
            words.append(make_word(text, line=li, pos=pos, x=x, y=y))
            x += 6.0 * len(text) + 6.0
        y += 14.0
    return Document(doc_id=doc_id, sender_id=sender_id, words=tuple(words))


@pytest.fixture
def simple_doc():
    return make_doc(
        [
            ["Invoice", "no.", "162054"],
            ["Date:", "2016-09-30"],
            ["Total", "EUR", "1,250.00"],
        ]
    )
