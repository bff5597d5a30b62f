if __name__ == '__main__':
    import argparse
    import sys
    from .drivers import COMMANDS, run

    prsr = argparse.ArgumentParser(prog='csquant', description="""
Coherent-state quantization checks and simulations.

Commands:
* verify: run the identity suite and write verify.json and verify.csv
* orderings: tabulate antinormal, Weyl and normal quantizations
* measure-sim: sample measurement outcomes and test region frequencies
* evolve: Liouville or classical Schrodinger time series

Exit codes: 0 pass, 1 identity or drift failure, 2 configuration error,
3 numerical degradation. Worker threads: CSQUANT_WORKERS (default 1).
""", formatter_class=argparse.RawDescriptionHelpFormatter)
    _ = prsr.add_argument(
        '-v', '--verbose', default=0, action='count'
    )
    _ = prsr.add_argument(
        '--config', required=True,
        help='Path to JSON run configuration (see csquant/defs for defaults)'
    )
    _ = prsr.add_argument(
        '--out', default='.',
        help='Output directory; created when missing'
    )
    _ = prsr.add_argument(
        'command', choices=sorted(COMMANDS), help='Command to run'
    )

    args = prsr.parse_args()
    sys.exit(run(args.command, args.config, args.out, verbose=args.verbose))
