setup(
    name='sampleproject',
)
