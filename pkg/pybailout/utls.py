import logging
from typing import Sequence

import numpy as np

from .config import Config

TIE_RTOL = 1e-12


def default_logger(name: str) -> logging.Logger:
    """Creates the file logger used by the CLI and the experiment runner."""
    logger = logging.getLogger(name)
    logger.setLevel(Config.LOG_LEVEL)
    if not any(isinstance(h, logging.FileHandler) for h in logger.handlers):
        handler = logging.FileHandler(Config.LOG_FILE, mode="a", delay=True)
        handler.setFormatter(
            logging.Formatter(
                "(%(name)s)  %(asctime)s - %(levelname)s: %(message)s",
                datefmt="%d-%m-%y %H:%M:%S",
            )
        )
        logger.addHandler(handler)
    return logger


def argmax_lowest(values: Sequence[float], rtol: float = TIE_RTOL) -> int:
    """Index of the maximum, ties (up to rtol) going to the lowest index."""
    values = np.asarray(values, dtype=float)
    best = values.max()
    slack = rtol * max(1.0, abs(best))
    return int(np.flatnonzero(values >= best - slack)[0])


def descending_order(scores: Sequence[float], digits: int = 12) -> np.ndarray:
    """Node order by decreasing score; equal scores keep index order."""
    rounded = np.round(np.asarray(scores, dtype=float), digits)
    return np.argsort(-rounded, kind="stable")


def mean_std(values: Sequence[float]):
    """Mean and population standard deviation."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return float("nan"), float("nan")
    return float(values.mean()), float(values.std(ddof=0))
