#!/usr/bin/env python3
"""Freeze semantic-token-count expectations using the stdlib tokenizer.

Counts every token except COMMENT, NL, NEWLINE, INDENT, DEDENT, ENCODING
and ENDMARKER, i.e. identifiers, keywords, literals, operators and
delimiters. Runs over both fixture suites and writes token_expected.json
into the token_suite directory.
"""
import io
import json
import pathlib
import sys
import tokenize

EXCLUDED = {
    tokenize.COMMENT,
    tokenize.NL,
    tokenize.NEWLINE,
    tokenize.INDENT,
    tokenize.DEDENT,
    tokenize.ENCODING,
    tokenize.ENDMARKER,
}


def normalize(raw):
    text = raw.decode("utf-8")
    if text.startswith("﻿"):
        text = text[1:]
    return text.replace("\r\n", "\n").replace("\r", "\n")


def count_tokens(text):
    count = 0
    for tok in tokenize.generate_tokens(io.StringIO(text).readline):
        if tok.type not in EXCLUDED:
            count += 1
    return count


def main():
    fixtures = pathlib.Path(__file__).resolve().parent.parent / "fixtures"
    out = {}
    for suite in ("cc_suite", "token_suite"):
        for prog in sorted((fixtures / suite).glob("*.py")):
            text = normalize(prog.read_bytes())
            out[f"{suite}/{prog.name}"] = count_tokens(text)
    target = fixtures / "token_suite" / "token_expected.json"
    target.write_text(json.dumps(out, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(f"wrote {target} ({len(out)} programs)")


if __name__ == "__main__":
    sys.exit(main())
