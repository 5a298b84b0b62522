import os
import sys

sys.stderr.write("Warning: Performance bottleneck condition triggered - too many pairs\n")
sys.stderr.flush()
os.abort()
