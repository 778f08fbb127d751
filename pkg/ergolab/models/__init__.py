# Mathematical objects: polynomials, base systems, symbol space, permutations
