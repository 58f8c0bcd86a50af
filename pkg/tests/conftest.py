import json
import threading
from fractions import Fraction
from http.server import BaseHTTPRequestHandler, HTTPServer

import pytest
from hypothesis import strategies as st

from serial_monopoly.curve import DemandCurve

F = Fraction


@pytest.fixture
def uniform():
    return DemandCurve.linear(1, 1)


@st.composite
def decreasing_curves(draw, max_points=5, strict=True):
    """Random continuous piecewise-linear demand with small rational breakpoints."""
    n = draw(st.integers(2, max_points))
    steps_x = draw(st.lists(st.integers(1, 8), min_size=n - 1, max_size=n - 1))
    low = 1 if strict else 0
    steps_y = draw(st.lists(st.integers(low, 8), min_size=n - 1, max_size=n - 1))
    x0 = F(draw(st.integers(0, 4)), 4)
    xs = [x0]
    for d in steps_x:
        xs.append(xs[-1] + F(d, 4))
    total = sum(steps_y) or 1
    ys = [F(total, 4)]
    for d in steps_y:
        ys.append(ys[-1] - F(d, 4))
    ys[-1] = F(0)
    return DemandCurve.from_points(list(zip(xs, ys)))


supplies = st.fractions(min_value=F(1, 8), max_value=F(4), max_denominator=8)


def make_handler(blocks):
    class Handler(BaseHTTPRequestHandler):
        def do_POST(self):
            req = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
            if req["method"] == "eth_blockNumber":
                result = hex(max(blocks))
            else:
                number = int(req["params"][0], 16)
                assert req["params"][1] is True
                result = blocks.get(number)
            body = json.dumps({"jsonrpc": "2.0", "id": req["id"], "result": result}).encode()
            self.send_response(200)
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def log_message(self, *args):
            pass

    return Handler


@pytest.fixture
def node():
    blocks = {
        5: {"number": "0x5", "transactions": [
            {"gas": "0x5208", "gasPrice": "0x3b9aca00"},
            {"gas": "0x7530", "gasPrice": "0x1", "maxFeePerGas": "0x77359400"},
        ]},
        6: {"number": "0x6", "transactions": []},
        7: {"number": "0x7"},
    }
    server = HTTPServer(("127.0.0.1", 0), make_handler(blocks))
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_port}"
    server.shutdown()
