"""Regenerates pvalue_oracle.json with mpmath at 50 significant digits.

Run from this directory: python3 gen_pvalue_oracle.py
"""
import json
import random

import mpmath as mp

mp.mp.dps = 50


def t_two_sided(t, df):
    # P(|T| >= |t|) = I_{df/(df+t^2)}(df/2, 1/2)
    t = mp.mpf(t)
    df = mp.mpf(df)
    x = df / (df + t * t)
    return mp.betainc(df / 2, mp.mpf(1) / 2, 0, x, regularized=True)


def t_cdf(x, df):
    x = mp.mpf(x)
    df = mp.mpf(df)
    tail = mp.betainc(df / 2, mp.mpf(1) / 2, 0, df / (df + x * x), regularized=True) / 2
    return 1 - tail if x > 0 else tail


def chi2_sf(x, df):
    return mp.gammainc(mp.mpf(df) / 2, mp.mpf(x) / 2, mp.inf, regularized=True)


def welch(a, b):
    a = [mp.mpf(v) for v in a]
    b = [mp.mpf(v) for v in b]
    na, nb = len(a), len(b)
    ma, mb = sum(a) / na, sum(b) / nb
    va = sum((v - ma) ** 2 for v in a) / (na - 1)
    vb = sum((v - mb) ** 2 for v in b) / (nb - 1)
    sa, sb = va / na, vb / nb
    t = (ma - mb) / mp.sqrt(sa + sb)
    df = (sa + sb) ** 2 / (sa ** 2 / (na - 1) + sb ** 2 / (nb - 1))
    return t, df, t_two_sided(t, df)


def pearson(table):
    (a, b), (c, d) = table
    n = mp.mpf(a + b + c + d)
    rows = [a + b, c + d]
    cols = [a + c, b + d]
    obs = [[a, b], [c, d]]
    stat = mp.mpf(0)
    for i in range(2):
        for j in range(2):
            e = mp.mpf(rows[i]) * cols[j] / n
            stat += (obs[i][j] - e) ** 2 / e
    return stat, chi2_sf(stat, 1)


def f(x):
    return float(x)


rng = random.Random(20240611)

welch_cases = [
    {"a": [1, 2, 3, 4, 5], "b": [2, 3, 4, 5, 6]},
    {"a": [1, 2, 3], "b": [1, 2, 3]},
]
while len(welch_cases) < 25:
    na = rng.randint(2, 40)
    nb = rng.randint(2, 40)
    shift = rng.uniform(-2, 2)
    sa = rng.uniform(0.2, 3)
    sb = rng.uniform(0.2, 3)
    a = [round(rng.gauss(0, sa), 6) for _ in range(na)]
    b = [round(rng.gauss(shift, sb), 6) for _ in range(nb)]
    welch_cases.append({"a": a, "b": b})

chi2_cases = [{"table": [[30, 10], [10, 30]]}, {"table": [[10, 10], [20, 20]]}]
while len(chi2_cases) < 25:
    n1 = rng.randint(5, 500)
    n2 = rng.randint(5, 500)
    p1 = rng.uniform(0.05, 0.95)
    p2 = min(0.98, max(0.02, p1 + rng.uniform(-0.3, 0.3)))
    a = sum(1 for _ in range(n1) if rng.random() < p1)
    c = sum(1 for _ in range(n2) if rng.random() < p2)
    table = [[a, n1 - a], [c, n2 - c]]
    if min(a + c, n1 + n2 - a - c) == 0:
        continue
    chi2_cases.append({"table": table})

welch_out = []
for case in welch_cases:
    t, df, p = welch(case["a"], case["b"])
    welch_out.append({**case, "t": f(t), "df": f(df), "p": f(p)})

chi2_out = []
for case in chi2_cases:
    stat, p = pearson(case["table"])
    chi2_out.append({**case, "stat": f(stat), "p": f(p)})

t_cdf_grid = []
for df in [0.5, 1, 2, 3, 5, 8, 10, 30, 100, 1000]:
    for x in [-12.0, -3.5, -1.0, -0.25, 0.0, 0.7, 2.0, 4.5, 25.0]:
        t_cdf_grid.append({"x": x, "df": df, "cdf": f(t_cdf(x, df))})

chi2_sf_grid = []
for df in [1, 2, 3, 4, 7, 10, 25, 100]:
    for x in [0.0, 0.01, 0.5, 1.0, 3.841, 6.635, 10.0, 20.0, 50.0, 150.0]:
        chi2_sf_grid.append({"x": x, "df": df, "sf": f(chi2_sf(x, df))})

with open("pvalue_oracle.json", "w") as fh:
    json.dump(
        {
            "welch": welch_out,
            "chi2": chi2_out,
            "t_cdf": t_cdf_grid,
            "chi2_sf": chi2_sf_grid,
        },
        fh,
        indent=1,
    )
