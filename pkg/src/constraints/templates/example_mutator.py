"""
Example custom mutator.

init(seed) is called once; fuzz(buf, add_buf, max_size) is called per
iteration and returns a bytearray of at most max_size bytes. All randomness
comes from the random module so that the caller can replay a mutation.
"""

import random

INTERESTING = [0, 1, 2, 9, 10, 99, 100, 127, 128, 255, 256, 1000, 65535, 100000]


def init(seed):
    random.seed(seed)


def generate():
    n = random.choice([1, 2, random.randint(1, 100), 100])
    values = [str(random.randint(1, 10 ** 9)) for _ in range(n)]
    return bytearray(f"{n}\n{' '.join(values)}\n", "utf-8")


def mutate_tokens(buf, add_buf):
    tokens = bytes(buf).split()
    if not tokens:
        return generate()
    index = random.randrange(len(tokens))
    choice = random.random()
    if choice < 0.4:
        tokens[index] = str(random.choice(INTERESTING)).encode()
    elif choice < 0.7 and add_buf:
        donor = bytes(add_buf).split() or [b"0"]
        tokens[index] = random.choice(donor)
    else:
        tokens.insert(index, tokens[index])
    return bytearray(b" ".join(tokens) + b"\n")


def fuzz(buf, add_buf, max_size):
    try:
        out = generate() if random.random() < 0.2 else mutate_tokens(buf, add_buf)
    except Exception:
        out = generate()
    return out[:max_size]
