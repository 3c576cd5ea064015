from hilbert_ela.cli import main  # pragma: nocover

if __name__ == "__main__":
    main()
