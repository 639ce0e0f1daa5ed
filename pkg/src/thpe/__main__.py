from thpe.cli import main

main()
