import hashlib


def derive_seed(root, *labels) -> int:
    """Child seed from a root seed and a path of labels (63-bit)."""
    text = "/".join([str(int(root))] + [str(x) for x in labels])
    digest = hashlib.blake2b(text.encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little") >> 1
