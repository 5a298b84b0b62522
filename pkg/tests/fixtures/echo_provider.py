import json
import sys

request = json.load(sys.stdin)
if request["messages"][-1]["content"] == "fail":
    print("gateway down", file=sys.stderr)
    sys.exit(1)
if request["messages"][-1]["content"] == "garbage":
    print("not json")
    sys.exit(0)
print(json.dumps({"content": f"{len(request['messages'])}:{request['messages'][-1]['content'].upper()}"}))
