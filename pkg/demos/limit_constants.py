"""Tabulate every closed-form limit constant across a (d, p) grid.

For each dimension the memory parameter p sweeps through the three
regimes. Constants that only exist in a particular regime are shown
where defined; requesting one outside its regime raises RegimeError,
which is how the table's blank cells arise.
"""

from fractions import Fraction

from erwalk import RegimeError, critical_p, limit_constants

COLUMNS = [
    ("clt_var", "CLT var/coord"),
    ("qsl_trace", "QSL trace"),
    ("lil_bound", "LIL envelope"),
    ("super_cov_coeff", "super coeff"),
]


def fmt(constants, name):
    value = constants.get(name)
    if value is None:
        return " " * 12
    return f"{value:12.6f}"


def main():
    for d in (1, 2, 3):
        pc = Fraction(2 * d + 1, 4 * d)
        assert float(pc) == critical_p(d)
        print(f"d = {d}  (critical p = {pc} = {float(pc):.4f})")
        header = f"  {'p':>8} {'a':>8} {'regime':>14}"
        header += "".join(f" {label:>14}" for _, label in COLUMNS)
        print(header)
        for p in (Fraction(0), Fraction(1, 4), Fraction(1, 2), pc,
                  Fraction(9, 10), Fraction(1)):
            try:
                c = limit_constants(d, p)
            except ValueError:
                continue
            row = f"  {float(p):>8.4f} {c.a:>+8.4f} {c.regime.value:>14}"
            row += "".join(f" {fmt(c, name):>14}" for name, _ in COLUMNS)
            print(row)
        print()

    # attribute access, unlike .get(), refuses out-of-regime constants
    diffusive = limit_constants(2, 0.5)
    try:
        diffusive.super_cov_coeff
    except RegimeError as exc:
        print(f"out-of-regime access raises RegimeError: {exc}")


if __name__ == "__main__":
    main()
