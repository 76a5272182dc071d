from sancdyn.cli import main

main()
