"""Cell and Map gadgets as surface definitions."""
from functools import lru_cache

# The Cell listing exactly as published.  Its get branch re-invokes the cell with
# ``s`` outside the scope of ``v?( s )``, so ``s`` there is a free global name.
CELL = """\
def Cell( slot, state ) => {
  new ( v ) {
    v!( state )
    match {
      slot ? get( ret ) => {
        v?( s ) => ret!( s )
        Cell( slot, s )
      }
      slot ? set( s ) => { Cell( slot, s ) }
    }
  }
}
"""

# Repaired variant (not from the listing): the get branch keeps the value it read,
# and the set branch drains the old value before re-instantiating.
REPAIRED_CELL = """\
def RepairedCell( slot, state ) => {
  new ( v ) {
    v!( state )
    match {
      slot ? get( ret ) => {
        v?( s ) => {
          ret!( s )
          RepairedCell( slot, s )
        }
      }
      slot ? set( s ) => {
        v?( old ) => { RepairedCell( slot, s ) }
      }
    }
  }
}
"""


# Variant used by the JavaScript translator: ``set`` carries an acknowledgement
# channel that is signalled once the new value is stored.
ACK_CELL = """\
def AckCell( slot, state ) => {
  new ( v ) {
    v!( state )
    match {
      slot ? get( ret ) => {
        v?( s ) => {
          ret!( s )
          AckCell( slot, s )
        }
      }
      slot ? set( s, ack ) => {
        v?( old ) => {
          ack!()
          AckCell( slot, s )
        }
      }
    }
  }
}
"""


def map_source(n: int, name: str = "Map") -> str:
    """The Map listing instantiated for ``n`` keys."""
    params = ", ".join(f"key_{i}, state_{i}" for i in range(1, n + 1))
    header = f"chan, {params}" if n else "chan"
    vs = ", ".join(f"v_{i}" for i in range(1, n + 1))
    lines = [f"def {name}( {header} ) => {{", f"  new ( {vs} ) {{" if n else "  {"]
    for i in range(1, n + 1):
        lines.append(f"    v_{i}!( state_{i} )")
    for i in range(1, n + 1):
        lines += [
            f"    chan ? get( key_{i}, ret ) => {{",
            f"      v_{i}?( x ) => ret!( x )",
            f"      {name}( {header} )",
            "    }",
        ]
    lines += ["  }", "}", ""]
    return "\n".join(lines)


MAX_MAP_KEYS = 4


def prelude_sources() -> dict:
    out = {"Cell": CELL, "RepairedCell": REPAIRED_CELL, "AckCell": ACK_CELL}
    for n in range(1, MAX_MAP_KEYS + 1):
        out[f"Map{n}"] = map_source(n, f"Map{n}")
    return out


@lru_cache(maxsize=1)
def prelude_defs() -> dict:
    """Name -> parsed ``SDef`` for every prelude definition."""
    from .parser import parse_surface
    return {name: parse_surface(src) for name, src in prelude_sources().items()}


def prelude() -> list:
    return list(prelude_defs().values())
