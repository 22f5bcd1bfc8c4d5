"""Independent re-implementation of the built-in hashed text encoder.

Prints reference values that the C++ tests freeze. Run: python3 hash_embed.py
"""
import math
import sys

OFFSET = 14695981039346656037
PRIME = 1099511628211
MASK = (1 << 64) - 1


def fnv1a64(data: bytes) -> int:
    h = OFFSET
    for b in data:
        h ^= b
        h = (h * PRIME) & MASK
    return h


def embed(text: str, d: int = 128):
    lower = text.strip().lower().encode()
    tokens, cur = [], bytearray()
    for b in lower:
        if chr(b).isalnum() and b < 0x80 or b >= 0x80:
            cur.append(b)
        elif cur:
            tokens.append(bytes(cur))
            cur = bytearray()
    if cur:
        tokens.append(bytes(cur))
    if not tokens:
        tokens = [lower]
    v = [0.0] * d
    for t in tokens:
        v[fnv1a64(b"w:" + t) % d] += 1
        for i in range(len(t) - 2):
            v[fnv1a64(b"t:" + t[i:i + 3]) % d] += 1
    n = math.sqrt(sum(x * x for x in v))
    return [x / n for x in v]


def cosine(a, b):
    return sum(x * y for x, y in zip(a, b))


if __name__ == "__main__":
    print("fnv1a64('') =", fnv1a64(b""))
    print("fnv1a64('w:classification') =", fnv1a64(b"w:classification"))
    a = embed("classification task")
    b = embed("regression line")
    print("cos(classification task, regression line) = %.17g" % cosine(a, b))
    c = embed("It's a classification task")
    print("cos(It's a classification task, classification task) = %.17g" % cosine(c, a))
    nz = [(i, x) for i, x in enumerate(embed("classification")) if x]
    print("embed(classification) nonzero:", ["%d:%.17g" % p for p in nz])
    sys.exit(0)
