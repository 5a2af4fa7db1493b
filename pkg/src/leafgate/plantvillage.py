"""Canonical 38-class leaf dataset registry: per-class image counts and the
declared (slightly larger) total, kept as a manifest-validation fixture.

The row sum is 53,973 while the declared total is 54,306; ingestion surfaces
that mismatch as a warning, never a failure.
"""

from __future__ import annotations

from .classifier import LabelRegistry

# (crop, condition, image count)
PLANTVILLAGE_TABLE: tuple[tuple[str, str, int], ...] = (
    ("Apple", "Cedar apple rust", 276),
    ("Apple", "Apple scab", 630),
    ("Apple", "Apple rot", 621),
    ("Apple", "Healthy", 1645),
    ("Blueberry", "Healthy", 1502),
    ("Cherry", "Powdery mildew", 1052),
    ("Cherry", "Healthy", 854),
    ("Corn", "Cercosporin leaf spot", 513),
    ("Corn", "Common rust", 1192),
    ("Corn", "Northern leaf blight", 985),
    ("Corn", "Healthy", 1162),
    ("Grape", "Black rot", 1180),
    ("Grape", "Esca (Black measles)", 1384),
    ("Grape", "Leaf blight", 1076),
    ("Grape", "Healthy", 423),
    ("Orange", "Huanglongbing", 5507),
    ("Peach", "Bacterial spot", 2291),
    ("Peach", "Healthy", 360),
    ("Bell pepper", "Bacterial spot", 997),
    ("Bell pepper", "Healthy", 1148),
    ("Potato", "Early blight", 1000),
    ("Potato", "Late blight", 1000),
    ("Potato", "Healthy", 152),
    ("Raspberry", "Healthy", 371),
    ("Soybean", "Healthy", 5090),
    ("Squash", "Powdery mildew", 1835),
    ("Strawberry", "Leaf scorch", 1109),
    ("Strawberry", "Healthy", 456),
    ("Tomato", "Early blight", 1000),
    ("Tomato", "Septoria leaf spot", 1771),
    ("Tomato", "Target spot", 1404),
    ("Tomato", "Leaf mold", 952),
    ("Tomato", "Bacterial spot", 2127),
    ("Tomato", "Late blight", 1910),
    ("Tomato", "Yellow leaf curl", 5357),
    ("Tomato", "Mosaic virus", 373),
    ("Tomato", "Spider mites", 1676),
    ("Tomato", "Healthy", 1592),
)

PLANTVILLAGE_DECLARED_TOTAL = 54306


def class_name(crop: str, condition: str) -> str:
    return f"{crop}___{condition}".replace(" ", "_")


PLANTVILLAGE_CLASS_NAMES: tuple[str, ...] = tuple(
    class_name(crop, condition) for crop, condition, _ in PLANTVILLAGE_TABLE)

PLANTVILLAGE_COUNTS: dict[str, int] = {
    class_name(crop, condition): count for crop, condition, count in PLANTVILLAGE_TABLE}


def plantvillage_registry() -> LabelRegistry:
    return LabelRegistry(PLANTVILLAGE_CLASS_NAMES,
                         declared_total=PLANTVILLAGE_DECLARED_TOTAL)
