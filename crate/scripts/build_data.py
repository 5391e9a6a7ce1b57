#!/usr/bin/env python3
"""Regenerate data/allcurves.* and data/degphi.* for conductors <= BOUND.

Curve data comes from the Cremona "mini" SQLite database shipped in the
passagemath-schemes wheel; modular degrees come from PARI/GP
(ellmoddegree), run through the gp binary in the passagemath-pari wheel.

    pip download --no-deps --only-binary :all: -d /tmp/pw \
        passagemath-schemes passagemath-pari
    python3 scripts/build_data.py --wheels /tmp/pw --bound 4000
"""
import argparse
import glob
import os
import re
import sqlite3
import subprocess
import tempfile
import zipfile


def extract_db(wheels, workdir):
    whl = glob.glob(os.path.join(wheels, "passagemath_schemes-*.whl"))[0]
    path = os.path.join(workdir, "cremona_mini.db")
    with zipfile.ZipFile(whl) as z:
        with open(path, "wb") as out:
            out.write(z.read("sage_wheels/share/cremona/cremona_mini.db"))
    return path


def extract_gp(wheels, workdir):
    whl = glob.glob(os.path.join(wheels, "passagemath_pari-*.whl"))[0]
    root = os.path.join(workdir, "pari")
    with zipfile.ZipFile(whl) as z:
        z.extractall(root)
    gp = os.path.join(root, "sage_wheels", "bin", "gp")
    os.chmod(gp, 0o755)
    return gp, os.path.join(root, "passagemath_pari.libs")


def split_label(label):
    m = re.fullmatch(r"(\d+)([a-z]+)(\d+)", label)
    return int(m.group(1)), m.group(2), int(m.group(3))


def class_key(letters):
    # base-26 with a=0, as in Cremona's ordering (a..z, ba, bb, ...)
    v = 0
    for ch in letters:
        v = v * 26 + (ord(ch) - 97)
    return (len(letters), v)


# Gamma_0(N)-optimal curve of each class: number 1 except for 990h.
OPTIMAL_EXCEPTIONS = {(990, "h"): 3}


def is_optimal(n, letters, num):
    return num == OPTIMAL_EXCEPTIONS.get((n, letters), 1)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--wheels", default="/tmp/pw")
    ap.add_argument("--bound", type=int, default=4000)
    ap.add_argument("--out", default=os.path.join(os.path.dirname(__file__), "..", "data"))
    args = ap.parse_args()

    work = tempfile.mkdtemp()
    db = sqlite3.connect(extract_db(args.wheels, work))
    rows = db.execute(
        "select cu.curve, cu.eqn, cu.tors, cl.rank from t_curve cu "
        "join t_class cl on cu.class = cl.class where cl.conductor <= ?",
        (args.bound,),
    ).fetchall()
    recs = []
    for label, eqn, tors, rank in rows:
        n, letters, num = split_label(label)
        recs.append((n, class_key(letters), letters, num, eqn.replace(" ", ""), rank, tors))
    recs.sort()

    tag = "00000-%05d" % args.bound
    with open(os.path.join(args.out, "allcurves." + tag), "w") as f:
        for n, _, letters, num, eqn, rank, tors in recs:
            f.write("%d %s %d %s %d %d\n" % (n, letters, num, eqn, rank, tors))

    # ellmoddegree is only the modular degree on the optimal curve
    opt = [r for r in recs if is_optimal(r[0], r[2], r[3])]
    gp, libs = extract_gp(args.wheels, work)
    script = os.path.join(work, "deg.gp")
    with open(script, "w") as f:
        for n, _, letters, num, eqn, _, _ in opt:
            f.write("print(ellmoddegree(ellinit(%s)));\n" % eqn)
        f.write("quit;\n")
    env = dict(os.environ, LD_LIBRARY_PATH=libs)
    out = subprocess.run([gp, "-q", "-s", "200000000", script], env=env,
                         capture_output=True, text=True, check=True).stdout.split()
    assert len(out) == len(opt), (len(out), len(opt))
    with open(os.path.join(args.out, "degphi." + tag), "w") as f:
        for (n, _, letters, num, eqn, _, _), deg in zip(opt, out):
            f.write("%d %s %d %s %s\n" % (n, letters, num, eqn, deg))


if __name__ == "__main__":
    main()
