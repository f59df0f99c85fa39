"""Program front end: AST, DSL parser, printer and symbolic utilities."""
