"""Reference outputs for the tiny fixture, computed with numpy only.

Regenerate with `python3 make_golden.py` from this directory.
"""

import csv

import numpy as np

N, D = 12, 5


def make_fixture():
    rng = np.random.default_rng(20240611)
    logs = rng.normal(size=(N, D)) @ np.diag([1.0, 0.8, 0.6, 1.2, 0.5])
    x = np.round(np.exp(logs) * 10.0, 4)
    lx = np.log(x)
    y = 1.5 * (lx[:, 0] - lx[:, 3]) + 0.7 * (lx[:, 1] - lx[:, 2]) + rng.normal(scale=0.3, size=N)
    return x, np.round(y, 4)


def clr(x):
    lx = np.log(x)
    return lx - lx.mean(axis=1, keepdims=True)


def balance(signs):
    signs = np.asarray(signs)
    r, s = (signs > 0).sum(), (signs < 0).sum()
    b = np.zeros(len(signs))
    b[signs > 0] = np.sqrt(s / (r * (r + s)))
    b[signs < 0] = -np.sqrt(r / (s * (r + s)))
    return b


def candidates(p):
    d = len(p)
    hi, lo = int(np.argmax(p)), int(np.argmin(p))
    rest = sorted((i for i in range(d) if i not in (hi, lo)), key=lambda i: (-abs(p[i]), i))
    s = np.zeros(d, dtype=int)
    s[hi], s[lo] = 1, -1
    out = [s.copy()]
    for i in rest:
        s[i] = -1 if p[i] < 0 else 1
        out.append(s.copy())
    return out


def criterion(values, yc):
    v = values - values.mean()
    if yc is None:
        return v @ v / (len(v) - 1)
    return abs(v @ yc) / (len(v) - 1)


def principal_balances(x, y):
    lx = np.log(x)
    yc = None if y is None else y - y.mean()
    out = []

    def node(parts):
        if len(parts) < 2:
            return
        xc = clr(x[:, parts])
        xc = xc - xc.mean(axis=0)
        if yc is None:
            p = np.linalg.svd(xc, full_matrices=False)[2][0]
        else:
            p = xc.T @ yc
        best, best_score = None, -1.0
        for s in candidates(p):
            score = criterion(lx[:, parts] @ balance(s), yc)
            if score > best_score * (1 + 1e-12):
                best, best_score = s, score
        full = np.zeros(D, dtype=int)
        full[parts] = best
        out.append(full)
        num = [parts[i] for i in range(len(parts)) if best[i] > 0]
        den = [parts[i] for i in range(len(parts)) if best[i] < 0]
        exc = [parts[i] for i in range(len(parts)) if best[i] == 0]
        if exc:
            conn = np.zeros(D, dtype=int)
            conn[exc] = 1
            conn[num + den] = -1
            out.append(conn)
            node(exc)
        node(num)
        node(den)

    node(list(range(D)))
    basis = np.column_stack([balance(s) for s in out])
    scores = np.array([criterion(lx @ basis[:, j], yc) for j in range(basis.shape[1])])
    order = np.argsort(-scores, kind="stable")
    return basis[:, order], scores[order]


def ols_predict(z_train, y_train, z_test):
    a = np.column_stack([np.ones(len(z_train)), z_train])
    coef = np.linalg.lstsq(a, y_train, rcond=None)[0]
    return np.column_stack([np.ones(len(z_test)), z_test]) @ coef


def krylov_pls_predict(x_train, y_train, x_test, k):
    """Univariate PLS with k components is least squares restricted to the
    Krylov space of X'X started at X'y."""
    c = clr(x_train)
    mu = c.mean(axis=0)
    xc = c - mu
    yc = y_train - y_train.mean()
    v = xc.T @ yc
    cols = []
    for _ in range(k):
        cols.append(v)
        v = xc.T @ (xc @ v)
    w = np.linalg.qr(np.column_stack(cols))[0]
    t = xc @ w
    g = np.linalg.lstsq(t, yc, rcond=None)[0]
    return y_train.mean() + (clr(x_test) - mu) @ w @ g


def loo_curve(x, y, method, max_k):
    preds = np.zeros((N, max_k))
    for i in range(N):
        tr = [j for j in range(N) if j != i]
        for k in range(1, max_k + 1):
            if method == "pls":
                preds[i, k - 1] = krylov_pls_predict(x[tr], y[tr], x[[i]], k)[0]
            else:
                basis, _ = principal_balances(x[tr], y[tr] if method == "pls-pb" else None)
                z = np.log(x) @ basis[:, :k]
                preds[i, k - 1] = ols_predict(z[tr], y[tr], z[[i]])[0]
    return np.sqrt(((preds - y[:, None]) ** 2).mean(axis=0))


def write_basis(path, basis, scores, label):
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["part"] + [f"PB{k + 1}" for k in range(basis.shape[1])])
        w.writerow([label] + [repr(float(s)) for s in scores])
        for i in range(D):
            w.writerow([f"P{i + 1}"] + [repr(float(v)) for v in basis[i]])


def main():
    x, y = make_fixture()
    with open("tiny.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow([f"P{i + 1}" for i in range(D)] + ["y"])
        for row, target in zip(x, y):
            w.writerow([repr(float(v)) for v in row] + [repr(float(target))])

    write_basis("tiny_pls_pb.csv", *principal_balances(x, y), "abs_cov")
    write_basis("tiny_pca_pb.csv", *principal_balances(x, None), "variance")

    max_k = D - 1
    with open("tiny_loo_cv.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["method", "k", "mean_error"])
        for method in ("pls-pb", "pca-pb", "pls"):
            for k, e in enumerate(loo_curve(x, y, method, max_k), start=1):
                w.writerow([method, k, repr(float(e))])


if __name__ == "__main__":
    main()
