"""Independent high-precision evaluation of the perturbation constants and
the sample-size report, transcribed from the printed formulas. Prints the
values frozen in test_bounds.cpp."""
import mpmath as mp

mp.mp.dps = 50


def constants(n, k, W, C1, C2, C3, B, T, M, G, l0, ls):
    V = mp.sqrt(n) * B + T
    b1 = 2 * ((W * C3 * V + C2) * (1 + 2 * W * C2) + C3 * n * k * W) * (W * C2 * (1 + W * C2) + C3 * n * k * W**2)
    a1 = ls * C2 * V * (C1 + M) + l0 * C2 * mp.sqrt(n) * B * (C1 + G) + b1
    a2 = (mp.mpf(1) / 4 * (C3 * n * k + (W * C3 * V + C2) ** 2) * (W * C2 * (1 + W * C2) + C3 * n * k * W**2)
          + ((W * C3 * V + C2) * (mp.mpf(1) / 2 + W * C2) + C3 * n * k * W)
          * (C2 * (mp.mpf(1) / 2 + W * (C3 * V + C2**2 + 1)) + W * (mp.mpf(1) / 2 * C3 * V + C3 * n * k)))
    a3 = (mp.mpf(1) / 4 * (C3 * n * k + W * C3 * V + C2) * ((W * C3 * V + C2) * (mp.mpf(1) / 2 + W * C2) + C3 * n * k * W)
          + mp.mpf(1) / 4 * (C3 * n * k + (W * C3 * V + C2) ** 2)
          * (C2 * (mp.mpf(1) / 2 + W * (C3 * V + C2**2 + 1)) + W * (mp.mpf(1) / 2 * C3 * V + C3 * n * k)))
    a4 = mp.mpf(1) / 16 * (C3 * n * k + W * C3 * V + C2) * (C3 * n * k + (W * C3 * V + C2) ** 2)
    return dict(V=V, b1=b1, a1=a1, a2=a2, a3=a3, a4=a4)


def regime_s(lam, C1):
    if lam < 1:
        return lam / 4
    if lam > 1:
        return lam
    return 2 * C1 / 3 + mp.mpf(1) / 2


def report(d, W, C1, sigma2, eta, delta, samples, L, lam, pc):
    s = regime_s(lam, C1)
    S = (s * eta - sigma2) / (2 * lam) + sigma2 / 2 - eta / 4
    Nc = 288 * L**4 / eta**2
    lhs = d * (mp.log(d) + mp.log(4 * W**2 / eta**2))
    rhs = samples * eta**2 / (144 * L**4) - 2 * mp.log(4 / (1 - delta))
    cover_log = d * mp.log(2 * W * mp.sqrt(d) / eta)
    general = 32 * L**4 / min(eta**2 / 9, S**2 / C1**2) * mp.log(2 / (1 - delta) * (2 + mp.e**cover_log))
    proof_a = s + pc["a1"] + pc["a2"] * eta + pc["a3"] * eta**2 + pc["a4"] * eta**3
    min_d = 0
    if rhs > 0:
        dd = 1
        while dd * (mp.log(dd) + mp.log(4 * W**2 / eta**2)) < rhs:
            dd += 1
        min_d = dd
    return dict(s=s, S_eta=S, N_c=Nc, lhs=lhs, rhs=rhs, cover_log=cover_log, general=general, proof_constant=proof_a,
                min_d_N=min_d)


def show(tag, vals):
    for key, v in vals.items():
        if isinstance(v, int):
            print(f"{tag}.{key} = {v}")
        else:
            print(f"{tag}.{key} = {mp.nstr(v, 20)}")


one = mp.mpf(1)
# Case A: sigmoid with a = (1), both weights 1.
A = dict(n=2, k=1, W=one, C1=one, C2=one / 4, C3=1 / (6 * mp.sqrt(3)), B=one, T=one, M=2 * one, G=2 * one, l0=one, ls=one)
pcA = constants(**A)
show("A", pcA)
show("A.t1", report(3, A["W"], A["C1"], one / 2, one / 10, one / 2, 3276, A["M"], A["ls"], pcA))
pcA2 = constants(**{**A, "ls": 0})
show("A.t2pc", pcA2)
show("A.t2", report(3, A["W"], A["C1"], one / 2, one / 10, one / 2, 256, A["G"], A["l0"], pcA2))

# Case B: sigmoid with a = (3, 2, 4, 1), k = 4, larger samples.
na = mp.sqrt(30)
B_ = dict(n=2, k=4, W=5 * one, C1=10 * one, C2=na / 4, C3=na / (6 * mp.sqrt(3)), B=one, T=2 * one, M=mp.mpf("1.5"), G=mp.mpf("1.25"),
          l0=mp.mpf("0.3"), ls=mp.mpf("0.5"))
pcB = constants(**B_)
show("B", pcB)
show("B.t1", report(12, B_["W"], B_["C1"], one / 2, mp.mpf("0.5"), mp.mpf("0.9"), 10**6, B_["M"], B_["ls"], pcB))
pcB2 = constants(**{**B_, "ls": 0})
show("B.t2", report(12, B_["W"], B_["C1"], one / 2, mp.mpf("0.5"), mp.mpf("0.9"), 5 * 10**5, B_["G"], B_["l0"], pcB2))
