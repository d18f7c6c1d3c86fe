"""Bundled named automorphisms, usable from any experiment file without a definition."""

from functools import lru_cache

from outflare.automorphisms import Automorphism, from_literals

# name: (images, inverse images)
BUNDLED: dict[str, tuple[tuple[str, ...], tuple[str, ...]]] = {
    "fibonacci": (("ab", "a"), ("b", "Ba")),
    "plastic": (("b", "c", "ab"), ("cA", "a", "b")),
    # plastic conjugated by the basis rotation a->b, b->c, c->a
    "plastic-conjugate": (("bc", "c", "a"), ("c", "aB", "b")),
    "rotation": (("b", "c", "a"), ("c", "a", "b")),
    "transposition": (("b", "a"), ("b", "a")),
    "identity-2": (("a", "b"), ("a", "b")),
    "identity-3": (("a", "b", "c"), ("a", "b", "c")),
}


def bundled_names() -> list[str]:
    return sorted(BUNDLED)


def is_bundled(name: str) -> bool:
    return name in BUNDLED


@lru_cache(maxsize=None)
def get_automorphism(name: str) -> Automorphism:
    """Look up and verify a bundled automorphism.

    :param str name: Bundled name
    :return: Automorphism
    :rtype: Automorphism
    """
    if name not in BUNDLED:
        raise KeyError(f"No bundled automorphism named '{name}'")
    images, inverse_images = BUNDLED[name]
    return from_literals(images, inverse_images, name=name)
