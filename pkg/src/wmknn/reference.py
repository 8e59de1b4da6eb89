"""Published accuracy and certainty tables (percent, k = 3..7).

Only Glass and ILPD have published results; Wine has none.
"""

from .classify import Variant

K_RANGE = (3, 4, 5, 6, 7)

# Comparisons are loose: the published split protocol, preprocessing and
# tie-breaking are unknown.
TOLERANCE = 5.0

_V = (Variant.KNN, Variant.WKNN, Variant.KNN_STAR, Variant.WKNN_STAR, Variant.MKNN, Variant.WMKNN)


def _table(rows):
    return {v: dict(zip(K_RANGE, row)) for v, row in zip(_V, rows)}


PUBLISHED = {
    ("ilpd", "accuracy"): _table([
        (60.09, 61.66, 61.30, 62.47, 63.24),
        (62.86, 60.86, 62.09, 61.69, 64.07),
        (58.92, 60.46, 60.90, 62.47, 63.24),
        (61.29, 60.44, 62.09, 61.69, 64.07),
        (58.16, 60.05, 62.23, 63.54, 65.34),
        (58.63, 59.16, 62.21, 63.59, 65.37),
    ]),
    ("ilpd", "certainty"): _table([
        (79.39, 76.74, 73.95, 73.55, 72.56),
        (80.38, 76.75, 74.49, 73.63, 72.86),
        (78.52, 75.76, 73.47, 73.31, 72.57),
        (79.64, 75.83, 74.12, 73.38, 72.87),
        (85.92, 81.30, 78.39, 77.92, 77.40),
        (85.92, 81.32, 78.42, 77.93, 77.45),
    ]),
    ("glass", "accuracy"): _table([
        (69.13, 68.18, 70.08, 67.77, 68.70),
        (70.08, 68.38, 70.02, 68.65, 69.13),
        (66.83, 67.72, 70.54, 67.77, 68.24),
        (67.79, 67.72, 69.56, 67.74, 68.22),
        (72.32, 74.31, 72.68, 72.38, 71.59),
        (73.47, 74.19, 72.07, 70.77, 70.53),
    ]),
    ("glass", "certainty"): _table([
        (84.67, 80.32, 76.61, 75.55, 74.23),
        (84.88, 80.35, 77.58, 76.31, 74.78),
        (84.14, 79.18, 77.03, 76.19, 74.18),
        (84.36, 79.22, 77.68, 76.22, 74.39),
        (89.02, 85.44, 83.62, 81.73, 80.12),
        (89.28, 85.79, 83.72, 81.84, 80.27),
    ]),
}


def published(dataset: str, metric: str, variant: Variant, k: int) -> float | None:
    return PUBLISHED.get((dataset, metric), {}).get(variant, {}).get(k)


def has_published(dataset: str) -> bool:
    return any(name == dataset for name, _ in PUBLISHED)
