import sys

print("done")
sys.stderr.write("some diagnostics\n")
sys.stderr.write("WEDGE_COST:1234\n")
