#!/usr/bin/env python3
"""Stand-in analysis interpreter speaking the call-syntax dialect.

Reads one expression per line on stdin. Supports assignment (`x <- e`),
numbers, strings, identifiers, `c(...)` vectors and the functions below.
Flags: --hang (read_scan never returns), --silent (scan_stat yields nothing),
--noisy (every eval also writes "warn!" to stderr).
"""

import math
import os
import sys
import time

FLAGS = set(sys.argv[1:])
ENV = {}


class Null:
    pass


NULL = Null()


def tokenize(s):
    toks, i = [], 0
    while i < len(s):
        ch = s[i]
        if ch in " \t\r\n":
            i += 1
        elif ch == '"':
            j, buf = i + 1, []
            while s[j] != '"':
                if s[j] == "\\":
                    j += 1
                    esc = s[j]
                    if esc == "x":
                        buf.append(chr(int(s[j + 1:j + 3], 16)))
                        j += 2
                    else:
                        buf.append({"n": "\n", "r": "\r", "t": "\t"}.get(esc, esc))
                else:
                    buf.append(s[j])
                j += 1
            toks.append(("str", "".join(buf)))
            i = j + 1
        elif s.startswith("<-", i):
            toks.append(("op", "<-"))
            i += 2
        elif ch in "(),":
            toks.append(("op", ch))
            i += 1
        elif ch.isdigit() or (ch == "-" and i + 1 < len(s) and (s[i + 1].isdigit() or s[i + 1] == "I")):
            j = i + 1
            while j < len(s) and (s[j].isalnum() or s[j] in ".+-"):
                j += 1
            text = s[i:j]
            toks.append(("num", float(text.replace("Inf", "inf"))))
            i = j
        else:
            j = i
            while j < len(s) and (s[j].isalnum() or s[j] in "._"):
                j += 1
            if j == i:
                raise SyntaxError("unexpected character %r" % ch)
            name = s[i:j]
            if name == "NaN":
                toks.append(("num", float("nan")))
            elif name == "Inf":
                toks.append(("num", float("inf")))
            else:
                toks.append(("id", name))
            i = j
    return toks


class Parser:
    def __init__(self, toks):
        self.toks, self.pos = toks, 0

    def peek(self):
        return self.toks[self.pos] if self.pos < len(self.toks) else (None, None)

    def take(self):
        tok = self.peek()
        self.pos += 1
        return tok

    def expr(self):
        kind, val = self.take()
        if kind == "num" or kind == "str":
            return ("lit", val)
        if kind != "id":
            raise SyntaxError("unexpected token %r" % (val,))
        nkind, nval = self.peek()
        if nkind == "op" and nval == "<-":
            self.take()
            return ("assign", val, self.expr())
        if nkind == "op" and nval == "(":
            self.take()
            args = []
            if self.peek() != ("op", ")"):
                while True:
                    args.append(self.expr())
                    sep = self.take()
                    if sep == ("op", ")"):
                        break
                    if sep != ("op", ","):
                        raise SyntaxError("expected , or )")
            else:
                self.take()
            return ("call", val, args)
        return ("ident", val)


def fmt(v):
    if v is NULL or v is None:
        return ""
    if isinstance(v, list):
        return " ".join(fmt(x) for x in v)
    if isinstance(v, float):
        if v.is_integer() and abs(v) < 1e15:
            return str(int(v))
        return repr(v)
    return str(v)


def load_scan(path):
    if "--hang" in FLAGS:
        while True:
            time.sleep(3600)
    rows = []
    with open(path) as f:
        for line in f:
            parts = line.split()
            if len(parts) == 3:
                rows.append(tuple(float(p) for p in parts))
    if not rows:
        raise ValueError("no scan data in " + path)
    return {"rows": rows, "path": path}


PROTON = 1.007276


def scan_stat(scan, what):
    if "--silent" in FLAGS:
        return NULL
    rows = scan["rows"]
    times = sorted({r[0] for r in rows})
    mzs = [r[1] for r in rows]
    stats = {
        "nof": float(len(times)),
        "time_min": min(times),
        "time_max": max(times),
        "mz_min": min(mzs),
        "mz_max": max(mzs),
        "mass_min": round(min(mzs) - PROTON, 6),
        "mass_max": round(max(mzs) - PROTON, 6),
    }
    return stats[what]


def svg(path, width, height, body):
    with open(path, "w") as f:
        f.write('<svg xmlns="http://www.w3.org/2000/svg" width="%d" height="%d">%s</svg>\n'
                % (width, height, body))
    return path


def aic_plot(scan, path):
    by_time = {}
    for t, _, inten in scan["rows"]:
        by_time.setdefault(t, []).append(inten)
    pts = sorted((t, sum(v) / len(v)) for t, v in by_time.items())
    top = max(p[1] for p in pts) or 1.0
    coords = " ".join("%d,%d" % (10 + i * 8, 110 - int(100 * a / top)) for i, (_, a) in enumerate(pts))
    return svg(path, 20 + 8 * len(pts), 120, '<polyline fill="none" stroke="black" points="%s"/>' % coords)


def heatmap(scan, path, method, step):
    cells = []
    rows = scan["rows"]
    top = max(r[2] for r in rows) or 1.0
    times = sorted({r[0] for r in rows})
    for r in rows:
        x = times.index(r[0]) * 6
        y = int(r[1] / max(step, 0.01)) % 200
        shade = 255 - int(255 * r[2] / top)
        cells.append('<rect x="%d" y="%d" width="6" height="2" fill="rgb(%d,%d,255)"/>' % (x, y, shade, shade))
    return svg(path, 6 * len(times), 200, "".join(cells))


def builtin(name, args):
    if name == "c":
        out = []
        for a in args:
            out.extend(a if isinstance(a, list) else [a])
        return out
    if name == "add":
        return float(sum(args))
    if name == "mean":
        xs = args[0] if isinstance(args[0], list) else args
        return sum(xs) / len(xs)
    if name == "paste":
        return "".join(fmt(a) for a in args)
    if name == "cat":
        sys.stdout.write("".join(fmt(a) for a in args))
        return NULL
    if name == "message":
        sys.stderr.write("".join(fmt(a) for a in args) + "\n")
        return NULL
    if name == "warn":
        sys.stderr.write("".join(fmt(a) for a in args) + "\n")
        return NULL
    if name == "sleep":
        time.sleep(args[0])
        return NULL
    if name == "delayed_cat":
        time.sleep(args[1])
        sys.stdout.write(fmt(args[0]))
        sys.stdout.flush()
        return NULL
    if name == "quit_with":
        sys.exit(int(args[0]))
    if name == "q":
        sys.exit(0)
    if name == "read_scan":
        return load_scan(args[0])
    if name == "scan_stat":
        return scan_stat(args[0], args[1])
    if name == "aic_plot":
        return aic_plot(args[0], args[1])
    if name == "heatmap":
        return heatmap(args[0], args[1], args[2], args[3])
    if name == "file_path":
        return os.path.join(*[fmt(a) for a in args])
    raise NameError("could not find function \"%s\"" % name)


def evaluate(node):
    kind = node[0]
    if kind == "lit":
        return node[1]
    if kind == "ident":
        if node[1] == "NULL":
            return NULL
        if node[1] not in ENV:
            raise NameError("object '%s' not found" % node[1])
        return ENV[node[1]]
    if kind == "assign":
        ENV[node[1]] = evaluate(node[2])
        return NULL
    return builtin(node[1], [evaluate(a) for a in node[2]])


def main():
    for line in sys.stdin:
        if not line.strip():
            continue
        try:
            if "--noisy" in FLAGS:
                sys.stderr.write("warn!\n")
            evaluate(Parser(tokenize(line)).expr())
        except SystemExit:
            sys.stdout.flush()
            raise
        except Exception as e:  # reported like an interpreter error
            sys.stderr.write("Error: %s\n" % e)
        sys.stdout.flush()
        sys.stderr.flush()


if __name__ == "__main__":
    main()
