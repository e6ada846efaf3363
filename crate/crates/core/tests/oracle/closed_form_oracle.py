"""High-precision reference values for the closed-form hyperbolic quantities.

Run with `python3 closed_form_oracle.py`; the printed values are frozen into
the Rust test suites. Uses mpmath at 60 significant digits and evaluates every
quantity straight from its defining formula (Mobius form of the pseudo-
hyperbolic distance, explicit roots), independent of the Rust code paths.
"""
from mpmath import mp, mpf, mpc, log, fabs, sqrt, root

mp.dps = 60


def rho(a, b):
    a, b = mpc(a), mpc(b)
    return fabs((a - b) / (1 - a * b.conjugate()))


def disk(a, b):
    r = rho(a, b)
    return log((1 + r) / (1 - r))


def polydisc(p, q):
    return max(disk(p[0], q[0]), disk(p[1], q[1]))


def punctured(x, y, R):
    x, y, R = mpf(x), mpf(y), mpf(R)
    return fabs(log(fabs(log(y / R))) - log(fabs(log(x / R))))


def superattracting_cert(m1, m2, eps, delta, kmax):
    eps, delta = mpf(eps), mpf(delta)
    best = None
    for k in range(kmax + 1):
        zt = root(eps, m1 ** k)
        wt = root(eps, m2 ** k)
        d = polydisc((1 - delta, delta), (zt, wt))
        best = d if best is None else min(best, d)
    return best


def mixed_cert(m, eps, delta, kmax):
    eps, delta = mpf(eps), mpf(delta)
    best = None
    for k in range(kmax + 1):
        zt = root(eps, m ** k) if eps > 0 else mpf(0)
        d = disk(1 - delta, zt)
        best = d if best is None else min(best, d)
    return best


def show(name, v):
    print(f"{name} = {mp.nstr(v, 17)}")


for i in range(1, 10):
    show(f"disk(0,{i/10})", disk(0, mpf(i) / 10))
show("polydisc((0,0),(0.5,0.8))", polydisc((0, 0), (mpf('0.5'), mpf('0.8'))))
show("polydisc((0.3+0.2i,-0.1),(-0.4i,0.6-0.1i))",
     polydisc((mpc('0.3', '0.2'), mpf('-0.1')), (mpc(0, '-0.4'), mpc('0.6', '-0.1'))))
show("punctured(0.1,0.5,2)", punctured('0.1', '0.5', 2))
show("punctured(1e-38,0.3,2)", punctured('1e-38', '0.3', 2))
show("punctured(1e-20,0.7,3)", punctured('1e-20', '0.7', 3))
for d in ['1e-3', '1e-9', '1e-20', '1e-38']:
    show(f"punctured({d},0.3,2)", punctured(d, '0.3', 2))

show("super(2,2,0.01,0.25,K=0)", superattracting_cert(2, 2, '0.01', '0.25', 0))
for j in (3, 4, 8, 12, 16, 20, 24, 30, 40):
    show(f"super(2,2,0.01,2^-{j},K=60)", superattracting_cert(2, 2, '0.01', mpf(2) ** -j, 60))
for C in (3, 5, 8):
    for j in range(3, 41):
        if superattracting_cert(2, 2, '0.01', mpf(2) ** -j, 60) > C:
            print(f"first ladder rung exceeding {C}: j = {j}")
            break
show("super(3,2,0.05,2^-25,K=60)", superattracting_cert(3, 2, '0.05', mpf(2) ** -25, 60))

show("mixed(2,0.01,1e-6,K=60)", mixed_cert(2, '0.01', '1e-6', 60))
mx = max(mixed_cert(2, '0.01', mpf(2) ** -j, 60) for j in range(3, 41))
show("max over ladder of mixed(2,0.01,2^-j,K=60)", mx)
for j in (3, 4, 7, 12, 40):
    show(f"mixed(2,0,2^-{j})", mixed_cert(2, 0, mpf(2) ** -j, 60))

a = mpf('0.1')
show("f1(0)", sqrt(mpf(2) / 3))
show("f1(0.5)", sqrt(mpf(2) / 3 - a * mpf('0.5')))
for n in range(0, 6):
    show(f"(2/3)^(1/2^{n})", root(mpf(2) / 3, 2 ** n))
c, b = mpf('0.01'), mpf('0.001')
disc = c * c + 4 * mpf(2) / 3
show("quad branch +", (-c + sqrt(disc)) / 2)
show("quad branch -", (-c - sqrt(disc)) / 2)
