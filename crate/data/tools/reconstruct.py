#!/usr/bin/env python3
"""Rebuild the committed fixture snapshots under data/.

The sandbox that produced this repository had no access to the World Bank
or JHU CSSE servers, so the snapshots are reconstructions:

* population: World Bank SP.POP.TOTL (WLD) decade anchors, with annual
  growth rates between anchors interpolated from UN WPP annual growth.
* gdp: NY.GDP.MKTP.PP.KD (WLD), anchored at 2018 and scaled so that the
  1990-2019 cumulative ratio matches the constant-PPP series.
* gcf: NE.GDI.TOTL.KD (WLD), anchored at 2018 from annual growth rates.
* jhu_global: global totals of the CSSE time_series_covid19_*_global files,
  2020-01-22 .. 2020-05-06, transcribed by hand.
* tradeoff_panel: synthetic weekly panel (5 countries x 9 weeks) whose
  log-log fit carries the published trade-off coefficients; the electricity
  counterfactual that produced the original panel is not reproduced.

Run from the repository root: python3 data/tools/reconstruct.py
"""
import math
import random

POP_GROWTH_PCT = [
    1.36, 1.73, 2.09, 2.06, 2.06, 2.11, 2.04, 2.05, 2.10, 2.07, 2.08, 2.02,
    1.97, 1.92, 1.84, 1.78, 1.75, 1.74, 1.76, 1.78, 1.79, 1.82, 1.79, 1.73,
    1.75, 1.76, 1.78, 1.75, 1.71, 1.68, 1.59, 1.54, 1.50, 1.46, 1.43, 1.40,
    1.37, 1.34, 1.31, 1.30, 1.28, 1.26, 1.25, 1.25, 1.24, 1.24, 1.23, 1.23,
    1.22, 1.21, 1.20, 1.22, 1.20, 1.19, 1.17, 1.16, 1.14, 1.10, 1.07,
]
POP_ANCHORS = {
    1960: 3.032160e9, 1970: 3.682488e9, 1980: 4.433e9, 1990: 5.280e9,
    2000: 6.114e9, 2010: 6.922e9, 2018: 7.594e9, 2019: 7.674e9,
}

# growth into 1991..2019
GDP_GROWTH_PCT = [
    1.5, 2.0, 2.0, 3.3, 3.3, 3.8, 4.0, 2.5, 3.5, 4.8, 2.5, 2.9, 4.3, 5.4, 4.9,
    5.5, 5.6, 3.0, -0.1, 5.4, 4.3, 3.5, 3.5, 3.6, 3.5, 3.3, 3.8, 3.6, 2.8,
]
GDP_RATIO_1990_2019 = 2.39
GDP_2018 = 1.211e14
GCF_GROWTH_PCT = [
    -0.5, 1.0, 0.5, 4.0, 3.5, 4.0, 4.5, 0.5, 3.5, 5.0, -1.0, 1.5, 4.0, 6.5,
    5.5, 6.0, 5.5, 1.5, -9.0, 7.5, 5.0, 3.5, 3.5, 3.5, 3.0, 2.5, 4.0, 3.8, 2.8,
]
GCF_2018 = 2.0e13

# confirmed, deaths, recovered from 2020-01-22
JHU = """
555 17 28
654 18 30
941 26 36
1434 42 39
2118 56 52
2927 82 61
5578 131 107
6166 133 126
8234 171 143
9927 213 222
12038 259 284
16787 362 472
19887 426 623
23898 492 852
27643 564 1124
30802 634 1487
34395 719 2011
37129 806 2616
40159 906 3244
42768 1013 3946
44810 1113 4683
45228 1118 5150
60381 1371 6295
66907 1523 8058
69032 1666 9395
71226 1770 10865
73260 1868 12583
75138 2007 14352
75641 2122 16121
76199 2247 18177
76843 2251 18890
78599 2458 22886
78985 2469 23394
79570 2629 25227
80415 2708 27905
81397 2770 30384
82756 2814 33277
84124 2872 36711
86013 2941 39782
88371 2996 42716
90309 3085 45602
92844 3160 48228
95124 3254 51170
97886 3348 53796
101800 3460 55865
105836 3558 58358
109835 3802 60694
113582 3988 62494
118582 4262 64404
125865 4615 67003
128343 4720 68324
145193 5404 70251
156099 5819 72624
167447 6440 76034
181546 7126 78088
197168 7905 80840
214915 8733 83207
242713 9867 84854
272167 11299 87256
304528 12973 91499
336953 14651 97704
378235 16505 98351
418045 18625 107969
467653 21181 113777
529591 23970 122150
593291 27198 130915
660706 30652 139415
720117 33925 149082
782365 37582 164566
857487 42107 178034
932605 47180 193177
1013157 52983 210263
1095917 58787 225796
1197405 64606 246152
1272115 69374 260012
1345101 74565 276515
1426096 81865 300054
1511104 88338 328661
1595350 95455 353975
1691719 102525 376096
1771514 108502 402110
1846680 114090 421722
1916765 119481 448655
1976192 125984 474261
2056055 134177 511019
2152437 143800 542107
2240190 153822 568343
2317758 159510 592319
2401378 165044 623903
2472259 169986 645738
2549123 176583 679819
2624610 183027 709694
2708885 190858 738486
2811193 197164 793601
2896746 202868 816685
2971475 206579 865733
3041764 211190 893967
3116398 217153 948425
3193886 227704 1014753
3256846 233388 1052415
3343777 238650 1074999
3427343 243808 1106918
3506729 247470 1131900
3583055 251537 1170340
3662691 257239 1195874
3755341 263831 1229070
"""

TRADEOFF_GDP_PCT = {
    "FRA": [1.5, 6, 18, 21, 20, 19, 18, 16, 14],
    "DEU": [1, 3, 9, 11, 10, 10, 9, 8, 7],
    "ITA": [3, 12, 22, 25, 24, 23, 22, 19, 16],
    "ESP": [1, 8, 20, 24, 25, 23, 21, 19, 17],
    "GBR": [0.5, 3, 12, 17, 16, 16, 15, 14, 12],
}
TRADEOFF_WEEKS = ["2020-03-09", "2020-03-16", "2020-03-23", "2020-03-30",
                  "2020-04-06", "2020-04-13", "2020-04-20", "2020-04-27",
                  "2020-05-04"]
LOG_Q1, Q2, RESID_SD = 3.677, 0.238, 0.383


def population():
    years = sorted(POP_ANCHORS)
    out = {1960: POP_ANCHORS[1960]}
    for a, b in zip(years, years[1:]):
        seg = POP_GROWTH_PCT[a - 1960:b - 1960]
        total = sum(math.log1p(g / 100) for g in seg)
        scale = math.log(POP_ANCHORS[b] / POP_ANCHORS[a]) / total
        for i, g in enumerate(seg):
            out[a + i + 1] = out[a + i] * math.exp(scale * math.log1p(g / 100))
    return out


def compound(growth, anchor_year, anchor):
    v = [1.0]
    for g in growth:
        v.append(v[-1] * (1 + g / 100))
    s = anchor / v[anchor_year - 1990]
    return {1990 + i: x * s for i, x in enumerate(v)}


def gdp():
    total = sum(math.log1p(g / 100) for g in GDP_GROWTH_PCT)
    scale = math.log(GDP_RATIO_1990_2019) / total
    g2 = [100 * math.expm1(scale * math.log1p(g / 100)) for g in GDP_GROWTH_PCT]
    return compound(g2, 2018, GDP_2018)


def project_out(eps, xs):
    # remove the components of eps along [1, x]
    n = len(xs)
    mx = sum(xs) / n
    me = sum(eps) / n
    sxx = sum((x - mx) ** 2 for x in xs)
    sxe = sum((x - mx) * (e - me) for x, e in zip(xs, eps))
    return [e - me - sxe / sxx * (x - mx) for x, e in zip(xs, eps)]


def tradeoff():
    rng = random.Random(2020)
    rows = [(c, w, g) for c, gs in TRADEOFF_GDP_PCT.items()
            for w, g in zip(TRADEOFF_WEEKS, gs)]
    xs = [math.log(g) for _, _, g in rows]
    eps = [rng.gauss(0.0, RESID_SD) for _ in rows]
    cap = math.log(99.0)
    # alternate projection and capping so the reductions stay below 100%
    for _ in range(500):
        eps = project_out(eps, xs)
        sd = math.sqrt(sum(e * e for e in eps) / (len(eps) - 2))
        eps = [e * RESID_SD / sd for e in eps]
        eps = [min(e, cap - LOG_Q1 - Q2 * x) for x, e in zip(xs, eps)]
    eps = project_out(eps, xs)
    return [(c, w, g, math.exp(LOG_Q1 + Q2 * x + e))
            for (c, w, g), x, e in zip(rows, xs, eps)]


def main():
    import datetime as dt
    with open("data/population_world.csv", "w") as f:
        f.write("year,population\n")
        for y, v in sorted(population().items()):
            f.write(f"{y},{round(v)}\n")
    with open("data/gdp_world.csv", "w") as f:
        f.write("year,gdp_usd\n")
        for y, v in sorted(gdp().items()):
            f.write(f"{y},{v:.6e}\n")
    with open("data/gcf_world.csv", "w") as f:
        f.write("year,gcf_usd\n")
        for y, v in sorted(compound(GCF_GROWTH_PCT, 2018, GCF_2018).items()):
            f.write(f"{y},{v:.6e}\n")
    with open("data/jhu_global.csv", "w") as f:
        f.write("date,confirmed,deaths,recovered\n")
        day = dt.date(2020, 1, 22)
        for line in JHU.strip().splitlines():
            c, d, r = line.split()
            f.write(f"{day.isoformat()},{c},{d},{r}\n")
            day += dt.timedelta(days=1)
    with open("data/tradeoff_panel.csv", "w") as f:
        f.write("country,week,gdp_shortfall_pct,infection_reduction_pct\n")
        for c, w, g, b in tradeoff():
            f.write(f"{c},{w},{g},{b:.4f}\n")


if __name__ == "__main__":
    main()
