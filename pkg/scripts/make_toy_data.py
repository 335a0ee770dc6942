"""Regenerate the shipped toy corpus and benchmark under src/sc2dec/data/.

    python scripts/make_toy_data.py [--compiler gcc]
"""

import argparse
import json
from pathlib import Path

from sc2dec.evaluation import EvalSample, materialize_asm, save_benchmark
from sc2dec.toolchain import CompilerConfig

DATA = Path(__file__).resolve().parents[1] / "src" / "sc2dec" / "data"

FUNCTIONS = [
    dict(
        id="add_one", entry_name="add_one", prelude="",
        body="int add_one(int a)\n{\n    return a + 1;\n}\n",
        harness="int main(void)\n{\n    if (add_one(1) != 2) return 1;\n    if (add_one(-1) != 0) return 1;\n    return 0;\n}\n",
    ),
    dict(
        id="scaled_abs", entry_name="scaled_abs", prelude="#include <stdlib.h>",
        body=(
            "int scaled_abs(int n)\n{\n"
            "    if (n == 0) return -1;\n"
            "    return abs(n) * 2;\n"
            "}\n"
        ),
        harness=(
            "int main(void)\n{\n"
            "    if (scaled_abs(0) != -1) return 1;\n"
            "    if (scaled_abs(-3) != 6) return 1;\n"
            "    if (scaled_abs(4) != 8) return 1;\n"
            "    return 0;\n}\n"
        ),
    ),
    dict(
        id="sum_to_n", entry_name="sum_to_n", prelude="",
        body=(
            "int sum_to_n(int n)\n{\n"
            "    int s = 0;\n"
            "    if (n < 0)\n"
            "        return -1;\n"
            "    for (int i = 1; i <= n; i++) {\n"
            "        s += i;\n"
            "    }\n"
            "    return s;\n"
            "}\n"
        ),
        harness=(
            "int main(void)\n{\n"
            "    if (sum_to_n(-5) != -1) return 1;\n"
            "    if (sum_to_n(0) != 0) return 1;\n"
            "    if (sum_to_n(10) != 55) return 1;\n"
            "    return 0;\n}\n"
        ),
    ),
    dict(
        id="factorial", entry_name="factorial", prelude="",
        body=(
            "long factorial(int n)\n{\n"
            "    long r = 1;\n"
            "    while (n > 1) {\n"
            "        r *= n;\n"
            "        n--;\n"
            "    }\n"
            "    return r;\n"
            "}\n"
        ),
        harness=(
            "int main(void)\n{\n"
            "    if (factorial(0) != 1) return 1;\n"
            "    if (factorial(5) != 120) return 1;\n"
            "    if (factorial(10) != 3628800L) return 1;\n"
            "    return 0;\n}\n"
        ),
    ),
    dict(
        id="is_prime", entry_name="is_prime", prelude="",
        body=(
            "int is_prime(int n)\n{\n"
            "    if (n < 2)\n"
            "        return 0;\n"
            "    for (int d = 2; d * d <= n; d++) {\n"
            "        if (n % d == 0)\n"
            "            return 0;\n"
            "    }\n"
            "    return 1;\n"
            "}\n"
        ),
        harness=(
            "int main(void)\n{\n"
            "    if (is_prime(1)) return 1;\n"
            "    if (!is_prime(2)) return 1;\n"
            "    if (!is_prime(97)) return 1;\n"
            "    if (is_prime(91)) return 1;\n"
            "    return 0;\n}\n"
        ),
    ),
    dict(
        id="gcd", entry_name="gcd", prelude="",
        body=(
            "int gcd(int a, int b)\n{\n"
            "    while (b != 0) {\n"
            "        int t = a % b;\n"
            "        a = b;\n"
            "        b = t;\n"
            "    }\n"
            "    return a;\n"
            "}\n"
        ),
        harness=(
            "int main(void)\n{\n"
            "    if (gcd(12, 18) != 6) return 1;\n"
            "    if (gcd(17, 5) != 1) return 1;\n"
            "    if (gcd(9, 0) != 9) return 1;\n"
            "    return 0;\n}\n"
        ),
    ),
    dict(
        id="count_vowels", entry_name="count_vowels", prelude="#include <ctype.h>\n#include <string.h>",
        body=(
            "int count_vowels(const char *s)\n{\n"
            "    int count = 0;\n"
            "    for (; *s; s++) {\n"
            "        char c = tolower((unsigned char)*s);\n"
            "        if (strchr(\"aeiou\", c) != NULL)\n"
            "            count++;\n"
            "    }\n"
            "    return count;\n"
            "}\n"
        ),
        harness=(
            "int main(void)\n{\n"
            "    if (count_vowels(\"\") != 0) return 1;\n"
            "    if (count_vowels(\"Decompile\") != 4) return 1;\n"
            "    if (count_vowels(\"xyz\") != 0) return 1;\n"
            "    return 0;\n}\n"
        ),
    ),
    dict(
        id="reverse_array", entry_name="reverse_array", prelude="",
        body=(
            "void reverse_array(int *a, int n)\n{\n"
            "    int i = 0;\n"
            "    int j = n - 1;\n"
            "    while (i < j) {\n"
            "        int t = a[i];\n"
            "        a[i] = a[j];\n"
            "        a[j] = t;\n"
            "        i++;\n"
            "        j--;\n"
            "    }\n"
            "}\n"
        ),
        harness=(
            "int main(void)\n{\n"
            "    int v[5] = {1, 2, 3, 4, 5};\n"
            "    reverse_array(v, 5);\n"
            "    for (int k = 0; k < 5; k++)\n"
            "        if (v[k] != 5 - k) return 1;\n"
            "    return 0;\n}\n"
        ),
    ),
    dict(
        id="max_element", entry_name="max_element", prelude="",
        body=(
            "int max_element(const int *a, int n)\n{\n"
            "    int best = a[0];\n"
            "    for (int i = 1; i < n; i++) {\n"
            "        if (a[i] > best)\n"
            "            best = a[i];\n"
            "    }\n"
            "    return best;\n"
            "}\n"
        ),
        harness=(
            "int main(void)\n{\n"
            "    int v[6] = {3, -1, 9, 4, 9, 2};\n"
            "    int w[3] = {-7, -3, -9};\n"
            "    if (max_element(v, 6) != 9) return 1;\n"
            "    if (max_element(w, 3) != -3) return 1;\n"
            "    return 0;\n}\n"
        ),
    ),
    dict(
        id="fib", entry_name="fib", prelude="",
        body=(
            "long fib(int n)\n{\n"
            "    long a = 0;\n"
            "    long b = 1;\n"
            "    for (int i = 0; i < n; i++) {\n"
            "        long t = a + b;\n"
            "        a = b;\n"
            "        b = t;\n"
            "    }\n"
            "    return a;\n"
            "}\n"
        ),
        harness=(
            "int main(void)\n{\n"
            "    if (fib(0) != 0) return 1;\n"
            "    if (fib(1) != 1) return 1;\n"
            "    if (fib(20) != 6765) return 1;\n"
            "    return 0;\n}\n"
        ),
    ),
    dict(
        id="is_palindrome", entry_name="is_palindrome", prelude="#include <string.h>",
        body=(
            "int is_palindrome(const char *s)\n{\n"
            "    int n = strlen(s);\n"
            "    for (int i = 0; i < n / 2; i++) {\n"
            "        if (s[i] != s[n - 1 - i])\n"
            "            return 0;\n"
            "    }\n"
            "    return 1;\n"
            "}\n"
        ),
        harness=(
            "int main(void)\n{\n"
            "    if (!is_palindrome(\"\")) return 1;\n"
            "    if (!is_palindrome(\"abcba\")) return 1;\n"
            "    if (is_palindrome(\"abca\")) return 1;\n"
            "    return 0;\n}\n"
        ),
    ),
    dict(
        id="digit_sum", entry_name="digit_sum", prelude="",
        body=(
            "int digit_sum(int n)\n{\n"
            "    int s = 0;\n"
            "    if (n < 0)\n"
            "        n = -n;\n"
            "    while (n > 0) {\n"
            "        s += n % 10;\n"
            "        n /= 10;\n"
            "    }\n"
            "    return s;\n"
            "}\n"
        ),
        harness=(
            "int main(void)\n{\n"
            "    if (digit_sum(0) != 0) return 1;\n"
            "    if (digit_sum(1234) != 10) return 1;\n"
            "    if (digit_sum(-99) != 18) return 1;\n"
            "    return 0;\n}\n"
        ),
    ),
    dict(
        id="hypotenuse", entry_name="hypotenuse", prelude="#include <math.h>",
        body=(
            "double hypotenuse(double x, double y)\n{\n"
            "    double sq = x * x + y * y;\n"
            "    return sqrt(sq);\n"
            "}\n"
        ),
        harness=(
            "int main(void)\n{\n"
            "    if (fabs(hypotenuse(3.0, 4.0) - 5.0) > 1e-9) return 1;\n"
            "    if (fabs(hypotenuse(0.0, 0.0)) > 1e-9) return 1;\n"
            "    return 0;\n}\n"
        ),
    ),
]


def reference_source(fn: dict) -> str:
    if fn["prelude"]:
        return fn["prelude"] + "\n" + fn["body"]
    return fn["body"]


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--compiler", default="gcc")
    args = parser.parse_args()

    with open(DATA / "toy_corpus.jsonl", "w") as fh:
        for fn in FUNCTIONS:
            row = {k: fn[k] for k in ("id", "prelude", "body", "entry_name")}
            fh.write(json.dumps(row, sort_keys=True) + "\n")

    samples = [
        EvalSample(fn["id"], reference_source(fn), fn["harness"], fn["entry_name"]) for fn in FUNCTIONS
    ]
    materialize_asm(samples, CompilerConfig(args.compiler))
    save_benchmark(samples, DATA / "toy_benchmark.jsonl")
    print(f"wrote {len(FUNCTIONS)} functions to {DATA}")


if __name__ == "__main__":
    main()
