from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
from colorama import Fore, Style

from core.config import MATRIX_DECIMALS


def _fmt_complex(z: complex, decimals: int) -> str:
    if abs(z.imag) < 0.5 * 10 ** -decimals:
        return f"{z.real:.{decimals}f}"
    sign = "+" if z.imag >= 0 else "-"
    return f"{z.real:.{decimals}f}{sign}{abs(z.imag):.{decimals}f}i"


def matrix_frame(m: np.ndarray, labels: Optional[Sequence[str]] = None,
                 decimals: int = MATRIX_DECIMALS) -> pd.DataFrame:
    """DataFrame view of a matrix; real when the imaginary part rounds away"""
    m = np.asarray(m)
    index = list(labels) if labels is not None else list(range(m.shape[0]))
    columns = list(labels) if labels is not None and len(labels) == m.shape[1] else list(range(m.shape[1]))
    if not np.iscomplexobj(m) or np.abs(m.imag).max() < 0.5 * 10 ** -decimals:
        return pd.DataFrame(np.round(np.real(m), decimals), index=index, columns=columns)
    cells = [[_fmt_complex(z, decimals) for z in row] for row in m]
    return pd.DataFrame(cells, index=index, columns=columns)


def format_matrix(m: np.ndarray, labels: Optional[Sequence[str]] = None,
                  decimals: int = MATRIX_DECIMALS) -> str:
    with pd.option_context("display.float_format", f"{{:.{decimals}f}}".format,
                           "display.width", 200, "display.max_columns", 32):
        return matrix_frame(m, labels, decimals).to_string()


def records_table(rows: List[Dict[str, Any]], decimals: int = MATRIX_DECIMALS) -> str:
    if not rows:
        return "(none)"
    df = pd.DataFrame(rows)
    with pd.option_context("display.float_format", f"{{:.{decimals}f}}".format, "display.width", 200):
        return df.to_string(index=False)


def print_section(title: str):
    print(f"\n{Fore.CYAN}{title}{Style.RESET_ALL}")
    print("-" * len(title))


def print_warning(message: str):
    print(f"{Fore.YELLOW}warning: {message}{Style.RESET_ALL}")


def print_success(message: str):
    print(f"{Fore.GREEN}{message}{Style.RESET_ALL}")


def print_error(message: str):
    print(f"{Fore.RED}{message}{Style.RESET_ALL}")
