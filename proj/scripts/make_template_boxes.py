#!/usr/bin/env python3
"""Extract the framed prompt boxes (mdframed environments) from a LaTeX/Markdown
source and write their text lines as JSON, for the template byte-match tests.

Markup is reduced the same way for every box: \\footnotesize dropped, \\\\
turned into a line break, \\$ \\_ \\% \\& unescaped, \\textcolor and \\textbf
unwrapped, then lines trimmed and blank lines dropped.

Usage: make_template_boxes.py SOURCE OUT_JSON
"""
import json
import re
import sys

OPEN, CLOSE = "\\begin{mdframed}", "\\end{mdframed}"
COLOUR = re.compile(r"\\textcolor\{[a-z]+\}\{(.*?)\}")
BOLD = re.compile(r"\\textbf\{(.*?)\}")


def boxes(text):
    out = []
    pos = text.find(OPEN)
    while pos != -1:
        body = text.find("]", pos) + 1
        end = text.find(CLOSE, body)
        s = text[body:end]
        for a, b in (("\\footnotesize", ""), ("\\\\", "\n"), ("\\$", "$"), ("\\_", "_"), ("\\%", "%"), ("\\&", "&")):
            s = s.replace(a, b)
        lines = [l.strip(" \t\r") for l in s.split("\n")]
        out.append([BOLD.sub(r"\1", COLOUR.sub(r"\1", l)) for l in lines if l.strip(" \t\r")])
        pos = text.find(OPEN, end)
    return out


def main():
    src, out_json = sys.argv[1], sys.argv[2]
    with open(src, encoding="utf-8") as f:
        data = boxes(f.read())
    with open(out_json, "w", encoding="utf-8") as f:
        json.dump(data, f, indent=1, ensure_ascii=False)
        f.write("\n")


if __name__ == "__main__":
    main()
