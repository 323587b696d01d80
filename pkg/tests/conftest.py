import numpy as np
import pytest

from actinf_lqg.model import LinearGaussianModel, benchmark_goal, benchmark_system


def random_spd(rng, n, scale=1.0, floor=0.5):
    X = rng.standard_normal((n, n))
    return scale * (X @ X.T / n + floor * np.eye(n))


def random_system(rng, n_x=None, n_u=None, n_y=None, square_b=False):
    n_x = n_x or int(rng.integers(1, 5))
    n_u = n_x if square_b else (n_u or int(rng.integers(1, 5)))
    n_y = n_y or int(rng.integers(1, 5))
    A = rng.standard_normal((n_x, n_x)) / np.sqrt(n_x)
    B = rng.standard_normal((n_x, n_u))
    if square_b:
        B = B + 2.0 * np.eye(n_x)
    C = rng.standard_normal((n_y, n_x))
    return LinearGaussianModel(A, B, C, random_spd(rng, n_x), random_spd(rng, n_y))


def kalman_textbook(m, V, u, y, model):
    """Covariance-form predict/update and the innovation log-likelihood."""
    mp = model.A @ m + model.B @ u
    Vp = model.A @ V @ model.A.T + np.linalg.inv(model.W_w)
    S = model.C @ Vp @ model.C.T + np.linalg.inv(model.W_v)
    K = Vp @ model.C.T @ np.linalg.inv(S)
    r = y - model.C @ mp
    m_new = mp + K @ r
    V_new = (np.eye(len(m)) - K @ model.C) @ Vp
    _, logdet = np.linalg.slogdet(2 * np.pi * S)
    loglik = -0.5 * r @ np.linalg.solve(S, r) - 0.5 * logdet
    return m_new, V_new, loglik


def riccati_textbook(A, B, Q, R, T):
    """Dynamic-programming value matrices; returns the first-stage gain."""
    S = Q.copy()
    for _ in range(T - 1):
        S = Q + A.T @ S @ A - A.T @ S @ B @ np.linalg.inv(R + B.T @ S @ B) @ B.T @ S @ A
    return np.linalg.inv(R + B.T @ S @ B) @ B.T @ S @ A


def dense_future_free_energy(m, W, model, Q, R, lam, T):
    """-log of the future-part integral from one joint quadratic form.

    Variables: x_t, then (u_k, x_{k+1}, y_{k+1}) for each future step.
    """
    n_x, n_u = model.B.shape
    n_y = model.C.shape[0]
    d = n_x + T * (n_u + n_x + n_y)
    J = np.zeros((d, d))
    h = np.zeros(d)
    c = 0.0

    def add_gaussian(L, P, mean):
        # log N(L z | mean, P^-1)
        nonlocal c, h, J
        J += L.T @ P @ L
        h += L.T @ P @ mean
        _, logdet = np.linalg.slogdet(P / (2 * np.pi))
        c += 0.5 * logdet - 0.5 * mean @ P @ mean

    def sel(start, n):
        S = np.zeros((n, d))
        S[:, start:start + n] = np.eye(n)
        return S

    xi = sel(0, n_x)
    add_gaussian(xi, W, m)
    add_gaussian(xi, lam * Q, np.zeros(n_x))
    pos = n_x
    x_prev = xi
    for _ in range(T):
        ui = sel(pos, n_u); pos += n_u
        xn = sel(pos, n_x); pos += n_x
        yi = sel(pos, n_y); pos += n_y
        add_gaussian(ui, lam * R, np.zeros(n_u))
        add_gaussian(xn - model.A @ x_prev - model.B @ ui, model.W_w, np.zeros(n_x))
        add_gaussian(yi - model.C @ xn, model.W_v, np.zeros(n_y))
        add_gaussian(xn, lam * Q, np.zeros(n_x))
        x_prev = xn
    _, logdetJ = np.linalg.slogdet(J)
    logZ = c + 0.5 * h @ np.linalg.solve(J, h) + 0.5 * d * np.log(2 * np.pi) - 0.5 * logdetJ
    return -logZ


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def system():
    return benchmark_system()


@pytest.fixture
def goal():
    return benchmark_goal(1.0)
