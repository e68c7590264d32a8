"""High-precision reference values frozen into the C++ test suites.

Run with: python3 tools/oracles/reference_values.py
Everything here is evaluated with mpmath at 50 significant digits and is
independent of the C++ implementation.
"""
from mpmath import mp, mpf, sqrt, log, erfinv, erfc, quad, exp, inf, gamma, ncdf

mp.dps = 50


def ninv(p):
    return sqrt(2) * erfinv(2 * mpf(p) - 1)


def iid_bound(sigma, d, inv_p, p1, p2):
    e = mpf(1) / 2 - inv_p
    return sigma / (2 * sqrt(2) * mpf(d) ** e) * (1 / sqrt(1 - p1) + 1 / sqrt(p2))


def gengauss_bound(sigma, d, inv_p, p1, p2):
    e = mpf(1) / 2 - inv_p
    return 2 * sigma / mpf(d) ** e * (sqrt(log(1 / (1 - p1))) + sqrt(log(1 / p2)))


def gaussian_lp(sigma, d, inv_p, p1, p2):
    e = mpf(1) / 2 - inv_p
    return sigma / (2 * mpf(d) ** e) * (ninv(p1) - ninv(p2))


def show(name, v):
    print(f"{name:40s} {mp.nstr(v, 20)}")


p1, p2 = mpf("0.999"), mpf("0.001")
show("iid sigma=1 d=3072 inf", iid_bound(1, 3072, 0, p1, p2))
show("gengauss sigma=1 d=3072 inf", gengauss_bound(1, 3072, 0, p1, p2))
show("linf b=1 d=3072 inf", mpf(2) / 3072)
show("l1 b=1 d=3072", mpf(2) / 3072)
show("gaussian sigma=0.12 d=3072 inf", gaussian_lp(mpf("0.12"), 3072, 0, p1, p2))
show("gaussian sigma=0.25 l2 .999/.001", gaussian_lp(mpf("0.25"), 1, mpf(1) / 2, p1, p2))

show("Phi(1)", ncdf(1))
show("Phi^-1(0.999)", ninv("0.999"))
show("Phi^-1(0.9)", ninv("0.9"))
show("Phi(2)", ncdf(2))

# Clopper-Pearson k = n closed form, and the certify examples built on it
for n in (100, 1000, 100000):
    lo = mpf("0.001") ** (mpf(1) / n)
    show(f"cp_lower(n,n,.001) n={n}", lo)
    show(f"  sigma*Phi^-1 (sigma=0.25) n={n}", mpf("0.25") * ninv(lo))

show("ratio_iid(0.9)", 1 / (ninv("0.9") * sqrt(2 * (1 - mpf("0.9")))))
show("ratio_gengauss(0.9)", 4 * sqrt(log(10)) / ninv("0.9"))

sigma = 1
show("halfspace s (d=16, .9)", 4 * ninv("0.9"))
show("halfspace eps (d=16, .9)", 4 * ninv("0.9") / 16)

# Binomial tail oracle for cp_lower(95, 100, 0.001)
from mpmath import binomial, findroot


def tail(p, k=95, n=100):
    return sum(binomial(n, j) * p**j * (1 - p) ** (n - j) for j in range(k, n + 1))


show("cp_lower(95,100,.001)", findroot(lambda p: tail(p) - mpf("0.001"), mpf("0.88")))
