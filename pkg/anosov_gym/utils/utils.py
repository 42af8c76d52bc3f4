from math import isclose


def close(a, b, rel=1e-12, abs_tol=0.0):
    return isclose(a, b, rel_tol=rel, abs_tol=abs_tol)


def printed_decimals(printed):
    """
    Number of decimals of a printed figure such as '0.000012' or '95'.
    """
    return len(printed.split('.')[1]) if '.' in printed else 0


def matches_printed(value, printed):
    """
    True when value rounds to the printed figure at its own precision.
    """
    return round(value, printed_decimals(printed)) == float(printed)
