"""World-set algebra over finite sets of possible worlds, with translations to and from second-order logic."""
