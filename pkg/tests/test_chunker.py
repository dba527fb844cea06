import random

import pytest
from hypothesis import given, settings, strategies as st

from ctxcode.errors import UnsupportedLanguage
from ctxcode.retrieval.chunker import ChunkKind, chunk_id_for, chunk_source, language_for
from ctxcode.synthetic import random_source

PY_TWO_FUNCS = '''"""Module header."""
# second header line

def alpha(x):
    return x + 1


def beta(y):
    return y * 2
'''

JS_PLANTED = """import { h } from './h';

export function Text({ value }) {
  const open = '{';
  return h('p', null, value);
}

export const Image = ({ src }) => {
  return h('img', { src });
};

export default class Video {
  render() {
    return `<video src="${this.src}">`;
  }
}
const LIMIT = 3;
"""

GO_PLANTED = """package blocks

import "fmt"

type Block struct {
\tName string
}

func (b Block) Render() string {
\treturn fmt.Sprintf("{%s}", b.Name)
}

func New(name string) Block {
\treturn Block{Name: name}
}
"""

TS_PLANTED = """export interface BlockProps {
  id: string;
}

export type Kind = 'text' | 'image';

export enum Mode {
  Edit,
  View,
}
"""


def kinds(chunks):
    return [(c.kind.value, c.symbol_name, c.start_line, c.end_line) for c in chunks]


def assert_tiles(text, chunks):
    n = len(text.split("\n")) - (1 if text.endswith("\n") else 0) if text else 0
    expected = 1
    for c in chunks:
        assert c.start_line == expected and c.start_line <= c.end_line
        expected = c.end_line + 1
    assert expected == n + 1
    assert "".join(c.text for c in chunks) == text


PLANTED = [
    (PY_TWO_FUNCS, "python", [("file_remainder", "", 1, 3), ("function", "alpha", 4, 7),
                             ("function", "beta", 8, 9)]),
    (JS_PLANTED, "javascript", [("file_remainder", "", 1, 2), ("function", "Text", 3, 7),
                               ("function", "Image", 8, 11), ("type_definition", "Video", 12, 16),
                               ("file_remainder", "", 17, 17)]),
    (GO_PLANTED, "go", [("file_remainder", "", 1, 4), ("type_definition", "Block", 5, 8),
                       ("function", "Render", 9, 12), ("function", "New", 13, 15)]),
    (TS_PLANTED, "typescript", [("type_definition", "BlockProps", 1, 4), ("type_definition", "Kind", 5, 6),
                               ("type_definition", "Mode", 7, 10)]),
]


@pytest.mark.parametrize("text,lang,expected", PLANTED)
def test_planted_boundaries(text, lang, expected):
    chunks = chunk_source(text, lang, "f")
    assert kinds(chunks) == expected
    assert_tiles(text, chunks)


def test_empty_file():
    assert chunk_source("", "python") == []


def test_single_function_file():
    text = "def only():\n    return 1\n"
    [c] = chunk_source(text, "python")
    assert (c.kind, c.start_line, c.end_line) == (ChunkKind.FUNCTION, 1, 2)


@pytest.mark.parametrize("text,lang", [
    ("def broken(:\n  pass\n", "python"),
    ("function f() {\n  return 1;\n", "javascript"),
    ("func f() {\n}}\n", "go"),
])
def test_unparseable_is_one_remainder(text, lang):
    [c] = chunk_source(text, lang, "x")
    assert c.kind is ChunkKind.FILE_REMAINDER and c.text == text


def test_unsupported_language():
    with pytest.raises(UnsupportedLanguage):
        chunk_source("x", "cobol")


def test_language_for():
    assert language_for("src/a.tsx").value == "typescript"
    assert language_for("README") is None


def test_chunk_id_stable():
    a = chunk_source(PY_TWO_FUNCS, "python", "m.py")
    b = chunk_source(PY_TWO_FUNCS, "python", "m.py")
    assert [c.chunk_id for c in a] == [c.chunk_id for c in b]
    assert a[1].chunk_id == chunk_id_for("m.py", 4, 7)


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 2**32), st.sampled_from(["python", "javascript", "go"]))
def test_generated_files_match_planted_structure(seed, lang):
    text, expected = random_source(random.Random(seed), lang)
    chunks = chunk_source(text, lang, "gen")
    assert [(c.kind.value, c.symbol_name) for c in chunks] == expected
    assert_tiles(text, chunks)


source_token = st.sampled_from(list("abf(){}[]'\"`/*\\\n \t=;#:") + ["def ", "function ", "class ", "func "])


@settings(max_examples=300, deadline=None)
@given(st.lists(source_token, max_size=40).map("".join),
       st.sampled_from(["python", "javascript", "typescript", "go"]))
def test_arbitrary_text_always_tiles(text, lang):
    assert_tiles(text, chunk_source(text, lang, "any"))
