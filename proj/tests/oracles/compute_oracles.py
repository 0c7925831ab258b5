"""Independent reference values for the unit and acceptance tests.

Computed in extended precision with mpmath; the resulting numbers are frozen
into the C++ tests. Nothing here calls into the library under test.
"""
from mpmath import mp, mpf, quad, gamma, cbrt, log, exp, findroot

mp.dps = 40


def rates(a1, zs, q, l):
    a = a1 * cbrt(mpf(l))
    return a, a * (zs + q / cbrt(mpf(l)))


def q_table(a1, zs, q, lmax):
    Q = [mpf(1)]
    for l in range(1, lmax):
        al, _ = rates(a1, zs, q, l)
        _, bl1 = rates(a1, zs, q, l + 1)
        Q.append(Q[-1] * al / bl1)
    return Q


print("Q2(1,1,1)        =", mp.nstr(q_table(1, 1, 1, 2)[1], 20))
Q = q_table(1, 1, 1, 64)
asym = exp(-mpf(3) / 2 * mpf(64) ** (mpf(2) / 3)) / cbrt(mpf(64))
print("Q64 recursion    =", mp.nstr(Q[63], 20), " asymptote =", mp.nstr(asym, 20),
      " ratio =", mp.nstr(Q[63] / asym, 10))

# critical density: brute-force 10^4 term sum
for (zs, q) in [(1, 1), (1, 2)]:
    Q = q_table(1, zs, q, 10000)
    rho = sum((l + 1) * Q[l] * mpf(zs) ** (l + 1) for l in range(10000))
    print(f"rho_crit(zs={zs},q={q}) =", mp.nstr(rho, 20))

# flux example
a2, b2 = rates(1, 1, 1, 2)
a3, b3 = rates(1, 1, 1, 3)
print("J2 example       =", mp.nstr(a2 * mpf('1.5') * mpf('0.1') - b3 * mpf('0.05'), 20))
# Dirichlet closure example, c2 = 0.5 only
c2 = mpf('0.5')
print("c1 dirichlet     =", mp.nstr(1 + (1 * 1 * c2 + b2 * c2) / (a2 * c2), 20))

# characteristics with L = 1: exit time T(y) = int_0^y dz / (1 - z^{1/3})
def T_exit(y):
    return quad(lambda z: 1 / (1 - cbrt(z)), [0, y])

print("T_x(0.3)         =", mp.nstr(T_exit(mpf('0.3')), 20))
y = findroot(lambda y: T_exit(y) - mpf('0.5'), mpf('0.3'))
print("F(0,0.5)         =", mp.nstr(y, 20))
# closed form cross-check with u = y^{1/3}
u = cbrt(y)
print("  closed form T  =", mp.nstr(-1.5 * u ** 2 - 3 * u - 3 * log(1 - u), 20))
# F(0.5, 0.5) with L = 1: backward from x=0.5 over time 0.5: T(F) - T(0.5) = 0.5
y2 = findroot(lambda y: T_exit(y) - T_exit(mpf('0.5')) - mpf('0.5'), mpf('0.7'))
print("F(0.5,0.5)       =", mp.nstr(y2, 20))
print("jac L=1,x=1,t=.25=", mp.nstr(exp(-mpf('0.25') / 3), 20))

# exponential-moment initial data c0 = x e^{-x}/2
print("L(0)             =", mp.nstr(gamma(mpf(7) / 3) ** 3, 20))
print("Gamma(7/3)       =", mp.nstr(gamma(mpf(7) / 3), 20))
print("E(0)             =", mp.nstr(gamma(mpf(8) / 3) / 2, 20))
print("M(0)             =", mp.nstr(gamma(mpf(10) / 3) / 2, 20))

# Jacobian with L = 1 from T(F(x,t)) - T(x) = t: dF/dx = (1 - F^{1/3}) / (1 - x^{1/3}).
# At x = 0 this is 1 - F(0,t)^{1/3}, finite and nonzero.
print("J(0,0.5)         =", mp.nstr(1 - cbrt(y), 20))
print("J(0.5,0.5)       =", mp.nstr((1 - cbrt(y2)) / (1 - cbrt(mpf('0.5'))), 20))
# semi-analytic number decay with L = 1 for c0 = x e^{-x}/2: N(t) = w0(F(0,t)),
# w0(y) = (1 + y) e^{-y} / 2
print("N(0.5) L=1       =", mp.nstr((1 + y) * exp(-y) / 2, 20))
