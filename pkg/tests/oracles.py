"""Independent reference computations shared by the tests."""
import mpmath

from alphap.qfield import preset_rect


def dist_rect_256(f, n1: int, n2: int, preset: str) -> mpmath.mpf:
    """||n alpha||_w at 256 bits, computed in rectangular coordinates from the preset's closed form."""
    with mpmath.workprec(256):
        re, im = preset_rect(preset, 256)
        im_w = mpmath.sqrt(mpmath.mpf(-f.d)) if f.trace_t == 0 else mpmath.sqrt(mpmath.mpf(-f.d)) / 2
        re_w = mpmath.mpf(f.trace_t) / 2
        n = mpmath.mpc(n1 + n2 * re_w, n2 * im_w)
        z = n * mpmath.mpc(re, im)
        c2 = z.imag / im_w
        c1 = z.real - re_w * c2
        return max(abs(c1 - mpmath.nint(c1)), abs(c2 - mpmath.nint(c2)))


def good_prime_holds(f, rec: dict, preset: str, theta) -> bool:
    with mpmath.workprec(256):
        dv = dist_rect_256(f, rec["n1"], rec["n2"], preset)
        return dv <= mpmath.mpf(rec["norm"]) ** (-mpmath.mpf(theta.numerator) / theta.denominator)
