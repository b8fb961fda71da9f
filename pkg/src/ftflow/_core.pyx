# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: native vector fields and the Dormand-Prince 5(4) loop.

Mirrors ``ftflow.integrate._integrate_python`` step for step; only the
field evaluation and the vector arithmetic move to C.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, log, exp, fabs, isfinite, INFINITY

cnp.import_array()

cdef Py_ssize_t MAX_REJECTS = 50
cdef double SAFETY = 0.9
cdef Py_ssize_t STALL_WINDOW = 200
cdef double FAC_MIN = 0.2, FAC_MAX = 5.0
cdef double ALPHA = 0.7 / 5.0, BETA = 0.4 / 5.0

cdef double A21 = 1.0 / 5
cdef double A31 = 3.0 / 40, A32 = 9.0 / 40
cdef double A41 = 44.0 / 45, A42 = -56.0 / 15, A43 = 32.0 / 9
cdef double A51 = 19372.0 / 6561, A52 = -25360.0 / 2187, A53 = 64448.0 / 6561, A54 = -212.0 / 729
cdef double A61 = 9017.0 / 3168, A62 = -355.0 / 33, A63 = 46732.0 / 5247, A64 = 49.0 / 176, A65 = -5103.0 / 18656
cdef double B1 = 35.0 / 384, B3 = 500.0 / 1113, B4 = 125.0 / 192, B5 = -2187.0 / 6784, B6 = 11.0 / 84
cdef double E1 = 71.0 / 57600, E3 = -71.0 / 16695, E4 = 71.0 / 1920, E5 = -17253.0 / 339200
cdef double E6 = 22.0 / 525, E7 = -1.0 / 40


cdef inline double _norm(const double* v, Py_ssize_t n) noexcept nogil:
    cdef double s = 0.0
    cdef Py_ssize_t i
    for i in range(n):
        s += v[i] * v[i]
    return sqrt(s)


cdef inline void _matvec(const double* M, const double* x, double* out,
                         Py_ssize_t rows, Py_ssize_t cols) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef double s
    for i in range(rows):
        s = 0.0
        for j in range(cols):
            s = s + M[i * cols + j] * x[j]
        out[i] = s


cdef inline void _matTvec_sub(const double* M, const double* v, double* out,
                              Py_ssize_t rows, Py_ssize_t cols) noexcept nogil:
    # out -= M^T v
    cdef Py_ssize_t i, j
    cdef double vi
    for i in range(rows):
        vi = v[i]
        if vi != 0.0:
            for j in range(cols):
                out[j] -= M[i * cols + j] * vi


cdef class NativeField:
    cdef public Py_ssize_t dim

    cdef void eval(self, const double* z, double* out) noexcept nogil:
        pass

    def __call__(self, z):
        cdef double[::1] zz = np.ascontiguousarray(z, dtype=np.float64)
        out = np.empty(self.dim)
        cdef double[::1] oo = out
        self.eval(&zz[0], &oo[0])
        return out


cdef class LinearField(NativeField):
    cdef double[:, ::1] M
    cdef double[::1] c

    def __init__(self, M, c):
        self.M = np.ascontiguousarray(M, dtype=np.float64)
        self.c = np.ascontiguousarray(c, dtype=np.float64)
        self.dim = self.M.shape[0]

    cdef void eval(self, const double* z, double* out) noexcept nogil:
        cdef Py_ssize_t i
        _matvec(&self.M[0, 0], z, out, self.dim, self.dim)
        for i in range(self.dim):
            out[i] += self.c[i]


cdef class PalL1Field(NativeField):
    cdef double[:, ::1] H
    cdef double[::1] h
    cdef double[:, ::1] T
    cdef double mu
    cdef Py_ssize_t n, d
    cdef double[::1] r

    def __init__(self, H, h, T, mu):
        self.H = np.ascontiguousarray(H, dtype=np.float64)
        self.h = np.ascontiguousarray(h, dtype=np.float64)
        self.T = np.ascontiguousarray(T, dtype=np.float64)
        self.mu = mu
        self.n = self.H.shape[0]
        self.d = self.T.shape[0]
        self.dim = self.n + self.d
        self.r = np.zeros(self.d)

    cdef void eval(self, const double* z, double* out) noexcept nogil:
        cdef Py_ssize_t i, j, n = self.n, d = self.d
        cdef double v, p, mu = self.mu
        cdef double* r = &self.r[0]
        cdef const double* y = z + n
        _matvec(&self.T[0, 0], z, r, d, n)
        for i in range(d):
            v = r[i] + mu * y[i]
            # soft threshold, boundary maps to zero
            if v > mu:
                p = v - mu
            elif v < -mu:
                p = v + mu
            else:
                p = 0.0
            r[i] = (v - p) / mu
            out[n + i] = mu * (r[i] - y[i])
        _matvec(&self.H[0, 0], z, out, n, n)
        for j in range(n):
            out[j] = -(out[j] + self.h[j])
        _matTvec_sub(&self.T[0, 0], r, out, d, n)


cdef class GenLagField(NativeField):
    cdef double[:, ::1] H
    cdef double[::1] h
    cdef double[:, ::1] A
    cdef double[::1] b
    cdef double[:, ::1] C
    cdef double[::1] dvec
    cdef double mu
    cdef Py_ssize_t n, p, q
    cdef double[::1] r

    def __init__(self, H, h, A, b, C, d, mu):
        self.H = np.ascontiguousarray(H, dtype=np.float64)
        self.h = np.ascontiguousarray(h, dtype=np.float64)
        self.n = self.H.shape[0]
        self.A = np.ascontiguousarray(np.reshape(A, (-1, self.n)), dtype=np.float64)
        self.b = np.ascontiguousarray(b, dtype=np.float64)
        self.C = np.ascontiguousarray(np.reshape(C, (-1, self.n)), dtype=np.float64)
        self.dvec = np.ascontiguousarray(d, dtype=np.float64)
        self.mu = mu
        self.p = self.A.shape[0]
        self.q = self.C.shape[0]
        self.dim = self.n + self.p + self.q
        self.r = np.zeros(max(self.p, self.q, 1))

    cdef void eval(self, const double* z, double* out) noexcept nogil:
        cdef Py_ssize_t i, j, n = self.n, p = self.p, q = self.q
        cdef double mu = self.mu, ri, s
        cdef double* r = &self.r[0]
        cdef const double* y = z + n
        cdef const double* nu = z + n + p
        _matvec(&self.H[0, 0], z, out, n, n)
        for j in range(n):
            out[j] = -(out[j] + self.h[j])
        if p > 0:
            _matvec(&self.A[0, 0], z, r, p, n)
            for i in range(p):
                ri = r[i] - self.b[i]
                s = mu * ri
                out[n + i] = (s if s > -y[i] else -y[i]) / mu
                s = s + y[i]
                r[i] = s if s > 0.0 else 0.0
            _matTvec_sub(&self.A[0, 0], r, out, p, n)
        if q > 0:
            _matTvec_sub(&self.C[0, 0], nu, out, q, n)
            _matvec(&self.C[0, 0], z, out + n + p, q, n)
            for i in range(q):
                out[n + p + i] -= self.dvec[i]


def make_field(kind, data):
    """Build a native field from a ``KernelSpec`` kind and data dict."""
    if kind == "linear":
        return LinearField(data["M"], data["c"])
    if kind == "pal_l1":
        return PalL1Field(data["H"], data["h"], data["T"], data["mu"])
    if kind == "genlag":
        return GenLagField(data["H"], data["h"], data["A"], data["b"],
                           data["C"], data["d"], data["mu"])
    raise ValueError(f"unknown kernel kind {kind!r}")


cdef class _Rhs:
    """Scaled right-hand side ``sigma(z) F(z)`` plus diagnostics."""
    cdef NativeField base
    cdef int variant
    cdef double eta, lam, eta1, eta2, lambda1, lambda2, band
    cdef double fnorm, sigma

    cdef void eval(self, const double* z, double* out) noexcept nogil:
        cdef Py_ssize_t i, n = self.base.dim
        cdef double fn, s, lg
        self.base.eval(z, out)
        fn = _norm(out, n)
        self.fnorm = fn
        if self.variant == 0:
            self.sigma = 1.0
            return
        if fn <= self.band * (1.0 + _norm(z, n)):
            for i in range(n):
                out[i] = 0.0
            self.sigma = 0.0
            return
        lg = log(fn)
        if self.variant == 1:
            s = self.eta * exp(-self.lam * lg)
        else:
            s = self.eta1 * exp(-self.lambda1 * lg) + self.eta2 * exp(self.lambda2 * lg)
        self.sigma = s
        for i in range(n):
            out[i] = s * out[i]


cdef class _Recorder:
    cdef public object times, states, fnorms, sigmas
    cdef Py_ssize_t count, cap, n

    def __init__(self, Py_ssize_t n):
        self.n = n
        self.cap = 256
        self.count = 0
        self.times = np.empty(self.cap)
        self.states = np.empty((self.cap, n))
        self.fnorms = np.empty(self.cap)
        self.sigmas = np.empty(self.cap)

    cdef void push(self, double t, const double* z, double fn, double sg):
        cdef Py_ssize_t i
        cdef double[:, ::1] S
        if self.count == self.cap:
            self.cap *= 2
            self.times = np.resize(self.times, self.cap)
            self.fnorms = np.resize(self.fnorms, self.cap)
            self.sigmas = np.resize(self.sigmas, self.cap)
            grown = np.empty((self.cap, self.n))
            grown[:self.count] = self.states[:self.count]
            self.states = grown
        S = self.states
        for i in range(self.n):
            S[self.count, i] = z[i]
        self.times[self.count] = t
        self.fnorms[self.count] = fn
        self.sigmas[self.count] = sg
        self.count += 1

    cdef double last_time(self):
        return self.times[self.count - 1]

    def result(self):
        c = self.count
        return (self.times[:c].copy(), self.states[:c].copy(),
                self.fnorms[:c].copy(), self.sigmas[:c].copy())


cdef inline double _dist(const double* z, const double* target, Py_ssize_t n) noexcept nogil:
    cdef double s = 0.0, e
    cdef Py_ssize_t i
    for i in range(n):
        e = z[i] - target[i]
        s += e * e
    return sqrt(s)


def integrate(NativeField base, int variant, double[::1] params, x0,
              double t_max, double rtol, double atol, double h_init, double h_max,
              double stop_norm, Py_ssize_t stride, double[::1] target, double thr,
              double max_disp, Py_ssize_t max_steps, double band):
    """Run the adaptive loop; returns arrays, termination code and counters.

    Termination codes: 0 t_max, 1 field_norm, 2 settle_event,
    3 step_underflow, -1 non-finite initial field.
    """
    cdef Py_ssize_t n = base.dim, i
    cdef _Rhs rhs = _Rhs()
    rhs.base = base
    rhs.variant = variant
    rhs.eta, rhs.lam, rhs.eta1 = params[0], params[1], params[2]
    rhs.eta2, rhs.lambda1, rhs.lambda2 = params[3], params[4], params[5]
    rhs.band = band

    work = np.zeros((11, n))
    cdef double[:, ::1] W = work
    cdef double* z = &W[0, 0]
    cdef double* k1 = &W[1, 0]
    cdef double* k2 = &W[2, 0]
    cdef double* k3 = &W[3, 0]
    cdef double* k4 = &W[4, 0]
    cdef double* k5 = &W[5, 0]
    cdef double* k6 = &W[6, 0]
    cdef double* k7 = &W[7, 0]
    cdef double* tmp = &W[8, 0]
    cdef double* znew = &W[9, 0]
    cdef double* anchor = &W[10, 0]
    cdef double* swap
    cdef double* tg = &target[0]
    cdef double[::1] x0v = np.ascontiguousarray(x0, dtype=np.float64)
    for i in range(n):
        z[i] = x0v[i]

    cdef _Recorder rec = _Recorder(n)
    cdef double t = 0.0, h, fn, sg, gnorm, znorm, znew_norm, scale, errn, fac, err_prev, e
    cdef bint has_settle = thr >= 0.0, last, last_rejected = False, finite, clamp
    cdef bint bad_trial = False
    cdef double dot, disp
    cdef Py_ssize_t n_acc = 0, n_rej = 0, rejects = 0, stalled = 0
    cdef int term = -2
    message = ""

    rhs.eval(z, k1)
    fn, sg = rhs.fnorm, rhs.sigma
    gnorm = _norm(k1, n)
    if not (isfinite(gnorm) and isfinite(fn)):
        rec.push(t, z, fn, sg)
        times, states, fnorms, sigmas = rec.result()
        return times, states, fnorms, sigmas, -1, 0, 0, "non-finite field at initial state"
    rec.push(t, z, fn, sg)

    if gnorm <= stop_norm:
        term = 1
    elif has_settle and _dist(z, tg, n) <= thr:
        term = 2

    if term == -2:
        h = (0.1 / (1.0 + gnorm) if 0.1 / (1.0 + gnorm) < 1e-3 else 1e-3) if h_init < 0 else h_init
        if h > h_max:
            h = h_max
        if h > t_max:
            h = t_max
        err_prev = 1e-4
        znorm = _norm(z, n)
        while True:
            if gnorm * h > max_disp:
                h = max_disp / gnorm
            last = t + h >= t_max * (1.0 - 1e-12)
            if last:
                h = t_max - t
            for i in range(n):
                tmp[i] = z[i] + h * (A21 * k1[i])
            rhs.eval(tmp, k2)
            for i in range(n):
                tmp[i] = z[i] + h * (A31 * k1[i] + A32 * k2[i])
            rhs.eval(tmp, k3)
            for i in range(n):
                tmp[i] = z[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i])
            rhs.eval(tmp, k4)
            for i in range(n):
                tmp[i] = z[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i])
            rhs.eval(tmp, k5)
            for i in range(n):
                tmp[i] = z[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i]
                                     + A64 * k4[i] + A65 * k5[i])
            rhs.eval(tmp, k6)
            for i in range(n):
                znew[i] = z[i] + h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i]
                                      + B5 * k5[i] + B6 * k6[i])
            rhs.eval(znew, k7)
            fn, sg = rhs.fnorm, rhs.sigma
            errn = 0.0
            finite = True
            for i in range(n):
                e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i]
                         + E6 * k6[i] + E7 * k7[i])
                errn += e * e
                if not isfinite(k7[i]):
                    finite = False
            znew_norm = _norm(znew, n)
            scale = atol + rtol * (znorm if znorm > znew_norm else znew_norm)
            errn = sqrt(errn) / scale
            if not (finite and isfinite(errn)):
                errn = INFINITY
            if errn <= 1.0:
                t = t_max if last else t + h
                clamp = False
                if variant != 0:
                    dot = 0.0
                    disp = 0.0
                    for i in range(n):
                        dot += k1[i] * k7[i]
                        e = znew[i] - z[i]
                        disp += e * e
                    disp = sqrt(disp)
                    if (disp <= 10.0 * (atol + rtol * znew_norm)
                            and (dot < 0.0 or disp < 0.1 * h * gnorm)):
                        if stalled == 0:
                            for i in range(n):
                                anchor[i] = z[i]
                        stalled += 1
                        if stalled >= STALL_WINDOW:
                            clamp = _dist(znew, anchor, n) <= 10.0 * (atol + rtol * znew_norm)
                            stalled = 0
                    else:
                        stalled = 0
                swap = z; z = znew; znew = swap
                swap = k1; k1 = k7; k7 = swap
                znorm = znew_norm
                gnorm = _norm(k1, n)
                n_acc += 1
                rejects = 0
                if gnorm <= stop_norm:
                    term = 1
                elif has_settle and _dist(z, tg, n) <= thr:
                    term = 2
                elif clamp:
                    term = 1
                    message = f"clamped at equilibrium band, t={t!r}"
                elif last:
                    term = 0
                elif n_acc >= max_steps:
                    term = 0
                    message = f"max_steps={max_steps} reached"
                if term != -2 or n_acc % stride == 0:
                    rec.push(t, z, fn, sg)
                if term != -2:
                    break
                fac = SAFETY * (errn if errn > 1e-10 else 1e-10) ** -ALPHA * err_prev ** BETA
                if fac > FAC_MAX:
                    fac = FAC_MAX
                if fac < FAC_MIN:
                    fac = FAC_MIN
                if last_rejected and fac > 1.0:
                    fac = 1.0
                err_prev = errn if errn > 1e-4 else 1e-4
                h = h * fac
                if h > h_max:
                    h = h_max
                last_rejected = False
            else:
                n_rej += 1
                rejects += 1
                if rejects > MAX_REJECTS:
                    term = 3
                    message = f"{rejects} consecutive rejections at t={t!r}"
                    break
                bad_trial = not isfinite(errn)
                if isfinite(errn):
                    fac = SAFETY * errn ** -0.2
                    if fac < FAC_MIN:
                        fac = FAC_MIN
                else:
                    fac = FAC_MIN
                h *= fac
                last_rejected = True
            if h < 1e-14 * t:
                term = 3
                message = f"step size {h!r} underflowed at t={t!r}"
                break
        if term == 3 and last_rejected and bad_trial:
            term = -1
            message = f"non-finite field values beyond t={t!r}"
        if rec.last_time() != t:
            rhs.eval(z, tmp)
            rec.push(t, z, rhs.fnorm, rhs.sigma)

    times, states, fnorms, sigmas = rec.result()
    return times, states, fnorms, sigmas, term, n_acc, n_rej, message
