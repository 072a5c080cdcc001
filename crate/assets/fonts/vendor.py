#!/usr/bin/env python3
"""Rebuild the bundled font set from fontsource npm packages.

Usage: vendor.py <dir with extracted @fontsource/* packages> <out dir>

Each package must be extracted as <dir>/fontsource-<name>-<ver>/package.
Latin faces use the `latin` subset, Arabic and Devanagari faces their
script subset. The two CJK faces are merged from the numbered chunks that
cover the shipped corpora, then subset to those characters plus ASCII.
"""
import glob
import os
import sys

from fontTools import subset
from fontTools.merge import Merger
from fontTools.ttLib import TTFont

HERE = os.path.dirname(os.path.abspath(__file__))

# (package, subset, weight, style, output file)
FACES = []


def family(pkg, sub, out, styles=("400-normal", "700-normal", "400-italic", "700-italic")):
    for s in styles:
        FACES.append((pkg, sub, s, f"{out}-{s}.ttf"))


family("tinos", "latin", "tinos")
family("gelasio", "latin", "gelasio")
family("crimson-text", "latin", "crimson-text")
family("libre-baskerville", "latin", "libre-baskerville")
family("playfair-display", "latin", "playfair-display")
family("cormorant-garamond", "latin", "cormorant-garamond")
family("arvo", "latin", "arvo")
family("arimo", "latin", "arimo")
family("roboto", "latin", "roboto")
family("inter", "latin", "inter")
family("jost", "latin", "jost")
family("nunito-sans", "latin", "nunito-sans")
family("cabin", "latin", "cabin")
family("marcellus", "latin", "marcellus", ("400-normal",))
family("fira-sans", "latin", "fira-sans")
family("cousine", "latin", "cousine")
family("special-elite", "latin", "special-elite", ("400-normal",))
family("noto-naskh-arabic", "arabic", "noto-naskh-arabic", ("400-normal", "700-normal"))
family("noto-kufi-arabic", "arabic", "noto-kufi-arabic", ("400-normal", "700-normal"))
family("noto-serif-devanagari", "devanagari", "noto-serif-devanagari", ("400-normal", "700-normal"))
family("noto-sans-devanagari", "devanagari", "noto-sans-devanagari", ("400-normal", "700-normal"))


def package_dir(src, pkg):
    hits = glob.glob(os.path.join(src, f"fontsource-{pkg}-[0-9]*", "package", "files"))
    if not hits:
        sys.exit(f"missing package {pkg}")
    return hits[0]


def corpus_chars():
    import re

    chars = set()
    for name in ("eval.toml", "finetune.toml"):
        text = open(os.path.join(HERE, "..", "corpus", name), encoding="utf-8").read()
        for s in re.findall(r'"([^"]*)"', text):
            chars.update(s)
    return chars


def build_cjk(src, out, pkg, stem):
    wanted = {ord(c) for c in corpus_chars() if ord(c) >= 0x2E80}
    for weight in ("400", "700"):
        chunks = []
        for f in sorted(glob.glob(os.path.join(package_dir(src, pkg), f"{pkg}-*-{weight}-normal.woff"))):
            font = TTFont(f)
            if wanted & set(font.getBestCmap()):
                chunks.append(f)
        latin = os.path.join(package_dir(src, pkg), f"{pkg}-latin-{weight}-normal.woff")
        paths = []
        for i, f in enumerate([latin] + chunks):
            font = TTFont(f)
            font.flavor = None
            p = os.path.join(out, f".tmp-{i}.ttf")
            font.save(p)
            paths.append(p)
        merged = Merger().merge(paths)
        opts = subset.Options()
        opts.layout_features = ["*"]
        sub = subset.Subsetter(opts)
        sub.populate(unicodes=sorted(wanted | set(range(0x20, 0x7F))))
        sub.subset(merged)
        merged.save(os.path.join(out, f"{stem}-{weight}-normal.ttf"))
        for p in paths:
            os.remove(p)


def main():
    src, out = sys.argv[1], sys.argv[2]
    os.makedirs(out, exist_ok=True)
    for pkg, sub, style, name in FACES:
        path = os.path.join(package_dir(src, pkg), f"{pkg}-{sub}-{style}.woff")
        font = TTFont(path)
        font.flavor = None
        font.save(os.path.join(out, name))
    build_cjk(src, out, "noto-sans-sc", "noto-sans-sc")
    build_cjk(src, out, "noto-serif-sc", "noto-serif-sc")


if __name__ == "__main__":
    main()
