from pathlib import Path

import pytest

from hlsdse.analyzer import SourceUnit, analyze
from hlsdse.pragmas import FUNCTION_KINDS
from hlsdse.qor import DEFAULT_PARTS

FIXTURES = Path(__file__).parent / "fixtures"

SINGLE_LOOP = """\
void toy(int a[4]) {
    for (int i = 0; i < 4; i++) {
        a[i] = a[i] + 1;
    }
}
"""

NESTED = """\
void nest(int out[1]) {
    int acc = 0;
    for (int i = 0; i < 4; i++) {
        for (int j = 0; j < 4; j++) {
            acc += i * j;
        }
    }
    out[0] = acc;
}
"""

VADD = """\
#define N 8
void vadd(int a[N], int b[N]) {
    for (int i = 0; i < N; i++)
        a[i] = b[i] * 2;
}
"""

MULTI = """\
#include "defs.h"
static int lut[SIZE];

void scale(int x[SIZE][4], int k) {
    for (int r = 0; r < SIZE; r++) {
        for (int c = 0; c < 4; c++) {
            x[r][c] = x[r][c] * k;
        }
    }
}

void top(int x[SIZE][4], int y[SIZE]) {
    int tmp[SIZE];
    for (int i = 0; i < SIZE; i += 2)
        tmp[i] = y[i] + lut[i];
    scale(x, 3);
    for (int i = SIZE - 1; i >= 0; i--) {
        y[i] = tmp[i];
    }
}
"""

DEFS_H = "#define SIZE 16\n"

ZU9 = DEFAULT_PARTS["xczu9eg-ffvb1156-2-e"]
U280 = DEFAULT_PARTS["xcu280-fsvh2892-2L-e"]


def unit_of(text, name="kernel.c"):
    return SourceUnit.from_text(text, name)


def multi_unit():
    from hlsdse.analyzer import SourceFile
    return SourceUnit((SourceFile("defs.h", DEFS_H), SourceFile("top.c", MULTI)))


@pytest.fixture
def toy():
    u = unit_of(SINGLE_LOOP)
    return u, analyze(u)


@pytest.fixture
def nested():
    u = unit_of(NESTED)
    return u, analyze(u)


@pytest.fixture
def multi():
    u = multi_unit()
    return u, analyze(u)


@pytest.fixture
def held():
    return FUNCTION_KINDS


@pytest.fixture
def reference_path():
    return FIXTURES / "reference_record.json"


# ten small kernels exercising braced/unbraced bodies, nesting, local and
# file-scope arrays, 2-D arrays and helper functions
TOY_KERNELS = [
    SINGLE_LOOP,
    NESTED,
    VADD,
    """\
void mm(int a[4][4], int b[4][4], int c[4][4]) {
    for (int i = 0; i < 4; i++)
        for (int j = 0; j < 4; j++) {
            int s = 0;
            for (int k = 0; k < 4; k++)
                s += a[i][k] * b[k][j];
            c[i][j] = s;
        }
}
""",
    """\
int w[8];

void fir(int x[8], int y[1]) {
    int acc = 0;
    for (int t = 0; t < 8; t++) {
        acc += w[t] * x[t];
    }
    y[0] = acc;
}
""",
    """\
void copy(int src[8], int dst[8]) {
    int buf[8];
    for (int i = 0; i < 8; i++) buf[i] = src[i];
    for (int i = 0; i < 8; i++) dst[i] = buf[i];
}
""",
    """\
static int sq(int v) { return v * v; }

void norm(int x[4], int out[1]) {
    int s = 0;
    for (int i = 0; i < 4; i += 1) {
        s += sq(x[i]);
    }
    out[0] = s;
}
""",
    """\
#define ROWS 2
#define COLS 8
void rowsum(int m[ROWS][COLS], int r[ROWS]) {
    for (int i = 0; i < ROWS; i++) {
        r[i] = 0;
        for (int j = 0; j < COLS; j += 2) { r[i] += m[i][j] + m[i][j + 1]; }
    }
}
""",
    """\
void helper(int v[4]) {
    for (int i = 0; i < 4; i++) v[i] = v[i] << 1;
}

void twice(int v[4]) {
    helper(v);
    for (int i = 3; i >= 0; i--) {
        v[i] += 1;
    }
}
""",
    """\
void hist(int data[16], int bins[4], int n) {
    for (int i = 0; i < n; i++) {
        bins[data[i] & 3] += 1;
    }
    for (int b = 0; b < 4; b++) bins[b] = bins[b] > 0;
}
""",
]


def random_config(info, rng, hold=()):
    """Uniform random legal configuration (exact, via subtree counts)."""
    from hlsdse.bayes import SearchSpace
    from hlsdse.design_space import build_design_tree
    space = SearchSpace(build_design_tree(info, hold))
    return space.sample(rng)


# acceptance scoreboard, filled by test_acceptance and printed at the end
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda l: int(l.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
