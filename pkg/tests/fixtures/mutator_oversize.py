def fuzz(buf, add_buf, max_size):
    return bytes(buf) + b"7" * (max_size + 1)
