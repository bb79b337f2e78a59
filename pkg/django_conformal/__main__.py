from django_conformal.cli import main

main()
